from .base_storage import BaseStorage
from .checkpoint_store import Checkpoint, CheckpointStore, load_checkpoint, save_checkpoint
from .video_store import VideoStore, load_video, read_ppm, write_pgm, write_ppm

__all__ = [
    "BaseStorage", "Checkpoint", "CheckpointStore", "load_checkpoint", "save_checkpoint",
    "VideoStore", "load_video", "read_ppm", "write_pgm", "write_ppm",
]
