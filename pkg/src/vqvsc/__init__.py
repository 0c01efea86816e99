"""Vector-quantised semantic video transmission with adaptive key-frame extraction."""

from .channel import ChannelModel, apply_channel
from .keyframe import KeyFrameExtractor, RateModel
from .msvq import Codebook, VectorQuantizer, VqConfig
from .pipeline import ExperimentConfig, Resources, sweep, transmit_video
from .video_io import read_raw_video, write_raw_video

__version__ = "0.1.0"

__all__ = [
    "ChannelModel",
    "Codebook",
    "ExperimentConfig",
    "KeyFrameExtractor",
    "RateModel",
    "Resources",
    "VectorQuantizer",
    "VqConfig",
    "apply_channel",
    "read_raw_video",
    "sweep",
    "transmit_video",
    "write_raw_video",
]
