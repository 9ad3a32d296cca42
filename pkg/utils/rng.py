"""
可拆分的命名随机数流

同一个 (seed, key 路径) 总是得到同一条 PCG64 随机流, 与调用顺序无关.
"""
import hashlib
from typing import Tuple, Union

import numpy as np

Key = Union[str, int]

_MASK64 = (1 << 64) - 1


def _key_words(key: Key) -> Tuple[int, int]:
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little"), int.from_bytes(digest[4:8], "little")


class SplittableRNG:
    """基于 numpy SeedSequence 的命名随机流"""

    def __init__(self, seed: int, name: str = "root", path: Tuple[int, ...] = ()):
        """
        :param seed: 64 位种子
        :param name: 流名称, 非 root 名称参与派生
        :param path: 派生路径 (由 split 维护)
        """
        self.seed = int(seed) & _MASK64
        self.name = name
        if not path and name != "root":
            path = _key_words(name)
        self._path = tuple(path)
        self._seq = np.random.SeedSequence(
            entropy=[self.seed & 0xFFFFFFFF, self.seed >> 32, *self._path]
        )

    def split(self, *keys: Key) -> "SplittableRNG":
        """派生子流, 相同 keys 得到相同子流"""
        path = list(self._path)
        for key in keys:
            path.extend(_key_words(key))
        name = "/".join([self.name, *[str(k) for k in keys]])
        return SplittableRNG(self.seed, name=name, path=tuple(path))

    def generator(self) -> np.random.Generator:
        """返回该流对应的全新 Generator (每次调用都从流起点开始)"""
        return np.random.Generator(np.random.PCG64(self._seq))

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        """[low, high) 均匀整数"""
        return self.generator().integers(low, high, size=size)

    def __repr__(self) -> str:
        return f"SplittableRNG(seed={self.seed}, name='{self.name}')"
