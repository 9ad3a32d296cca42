from .classification import scene_classification_loss
from .quality_losses import ScoreBatch, combined_loss, combined_loss_terms, mono_loss, plcc_loss

__all__ = ["ScoreBatch", "combined_loss", "combined_loss_terms", "mono_loss", "plcc_loss", "scene_classification_loss"]
