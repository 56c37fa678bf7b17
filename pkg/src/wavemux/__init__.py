"""wavemux: live spectral similarity and selective wavelet coherence.

Ingests M concurrent signal streams into sliding windows, tracks pairwise
spectral cosine similarity as a complete weighted graph layer, gates a
sparse second layer by smoothed similarity with hysteresis, and computes
smoothed wavelet coherence (with relative phase) for the gated pairs on a
subsampled cadence, publishing everything over server-sent events.
"""

from .config import EngineConfig, load_config
from .engine import Engine, RunSummary, TickReport
from .errors import WavemuxError

__all__ = [
    "Engine",
    "EngineConfig",
    "RunSummary",
    "TickReport",
    "WavemuxError",
    "load_config",
]

__version__ = "0.1.0"
