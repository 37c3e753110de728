import numpy as np
import pytest

from twinbeam import DetectionChannel, ExperimentConfig, ModePartition


def make_config(
    matched=1,
    unmatched_signal=0,
    unmatched_idler=0,
    mean=1.0,
    eta1=1.0,
    eta2=None,
    noise1=0.0,
    noise2=0.0,
    bg1=0.0,
    bg2=0.0,
):
    if eta2 is None:
        eta2 = eta1
    return ExperimentConfig(
        partition=ModePartition(matched, unmatched_signal, unmatched_idler),
        mean_photons_per_mode=mean,
        signal_channel=DetectionChannel(eta1, noise1),
        idler_channel=DetectionChannel(eta2, noise2),
        background_signal=bg1,
        background_idler=bg2,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
