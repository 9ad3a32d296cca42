from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402


class QualityVisualization:
    """Training curve and quality map figures"""

    @staticmethod
    def plot_training_curve(epoch_log: pd.DataFrame, title: str = "Training", save_path: Optional[str] = None):
        """Plot loss terms and train correlations per epoch"""
        fig, (ax_loss, ax_corr) = plt.subplots(1, 2, figsize=(12, 4))
        for column in ("loss", "mono", "plcc_loss"):
            if column in epoch_log.columns:
                ax_loss.plot(epoch_log["epoch"], epoch_log[column], label=column)
        ax_loss.set_xlabel("Epoch")
        ax_loss.set_title(f"{title} loss")
        ax_loss.legend()
        ax_loss.grid(True)

        for column in ("train_srcc", "train_plcc"):
            if column in epoch_log.columns:
                ax_corr.plot(epoch_log["epoch"], epoch_log[column], label=column)
        ax_corr.set_xlabel("Epoch")
        ax_corr.set_ylim(-1.05, 1.05)
        ax_corr.set_title(f"{title} correlation")
        ax_corr.legend()
        ax_corr.grid(True)

        fig.tight_layout()
        if save_path:
            fig.savefig(save_path)
        plt.close(fig)
        return save_path

    @staticmethod
    def plot_quality_maps(maps: dict, frame: np.ndarray, save_path: Optional[str] = None):
        """
        Plot one temporal slice of each quality map next to the source frame

        :param maps: name -> [H', W'] map
        :param frame: [H, W, 3] uint8
        """
        fig, axes = plt.subplots(1, len(maps) + 1, figsize=(4 * (len(maps) + 1), 4))
        axes[0].imshow(frame)
        axes[0].set_title("frame")
        axes[0].axis("off")
        for ax, (name, values) in zip(axes[1:], maps.items()):
            image = ax.imshow(values, cmap="viridis", interpolation="nearest")
            ax.set_title(name)
            ax.axis("off")
            fig.colorbar(image, ax=ax, fraction=0.046)
        fig.tight_layout()
        if save_path:
            fig.savefig(save_path)
        plt.close(fig)
        return save_path
