"""场景分类交叉熵, 用于合成数据上的语义预训练"""
import numpy as np

from calculation.autodiff import Function, Tensor
from utils.exceptions import ContractError, DimensionError


class SoftmaxCrossEntropy(Function):
    """mean_i -log softmax(logits_i)[label_i]"""
    name = "cross_entropy"

    def __init__(self, labels: np.ndarray):
        self.labels = labels

    def forward(self, logits):
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_probs = shifted - log_norm
        self.probs = np.exp(log_probs)
        rows = np.arange(logits.shape[0])
        return np.asarray(-log_probs[rows, self.labels].mean(), dtype=logits.dtype)

    def backward(self, grad):
        d_logits = self.probs.copy()
        d_logits[np.arange(d_logits.shape[0]), self.labels] -= 1.0
        return (grad * d_logits / d_logits.shape[0],)


def scene_classification_loss(logits: Tensor, labels: np.ndarray) -> Tensor:
    """
    :param logits: [B, K]
    :param labels: [B] 取值 [0, K)
    :raises DimensionError: 形状不一致
    :raises ContractError: 类别越界
    """
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if logits.data.ndim != 2 or logits.shape[0] != labels.shape[0]:
        raise DimensionError("分类 logits 与标签长度不一致", logits.shape, labels.shape)
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise ContractError(f"类别标签越界: [{labels.min()}, {labels.max()}], 类别数 {logits.shape[1]}")
    return SoftmaxCrossEntropy.apply(logits, labels=labels)
