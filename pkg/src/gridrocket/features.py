"""Feature matrix container with binary and CSV serialization.

Rows are instances; columns interleave the pooled features per kernel in
bank order: ``[ppv_0, max_0(, mpv_0), ppv_1, max_1(, mpv_1), ...]``.
"""

from dataclasses import dataclass

import numpy as np

from ._binio import read_array, read_header, read_values, write_array, write_header, write_values

_FEAT_MAGIC = b"RKFM"
_FEAT_VERSION = 1

PRECISION_DTYPES = {"single": np.float32, "double": np.float64}
FEATURE_NAMES = ("ppv", "max", "mpv")


def precision_dtype(precision: str):
    try:
        return PRECISION_DTYPES[precision]
    except KeyError:
        raise ValueError(f"precision must be one of {sorted(PRECISION_DTYPES)}") from None


@dataclass
class FeatureMatrix:
    values: np.ndarray
    n_kernels: int
    features_per_kernel: int
    precision: str

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValueError("feature values must be 2-D")
        if self.values.shape[1] != self.n_kernels * self.features_per_kernel:
            raise ValueError("column count does not match kernels * features_per_kernel")
        if self.features_per_kernel not in (2, 3):
            raise ValueError("features_per_kernel must be 2 or 3")
        precision_dtype(self.precision)

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    def column_names(self) -> list:
        names = FEATURE_NAMES[: self.features_per_kernel]
        return [f"k{k}_{name}" for k in range(self.n_kernels) for name in names]

    def feature(self, name: str) -> np.ndarray:
        """All columns of one pooled feature, shape (n_instances, n_kernels)."""
        offset = FEATURE_NAMES.index(name)
        if offset >= self.features_per_kernel:
            raise ValueError(f"matrix does not carry {name!r}")
        return self.values[:, offset :: self.features_per_kernel]

    def save(self, path) -> None:
        with open(path, "wb") as f:
            write_header(f, _FEAT_MAGIC, _FEAT_VERSION)
            tag = 0 if self.precision == "single" else 1
            write_values(
                f, "QQIB", self.n_instances, self.n_kernels, self.features_per_kernel, tag
            )
            write_array(f, self.values.astype(precision_dtype(self.precision), copy=False))

    @classmethod
    def load(cls, path) -> "FeatureMatrix":
        with open(path, "rb") as f:
            read_header(f, _FEAT_MAGIC, _FEAT_VERSION)
            n_instances, n_kernels, fpk, tag = read_values(f, "QQIB")
            precision = "single" if tag == 0 else "double"
            values = read_array(
                f, precision_dtype(precision), int(n_instances * n_kernels * fpk)
            ).reshape(int(n_instances), int(n_kernels * fpk))
        return cls(
            values=values,
            n_kernels=int(n_kernels),
            features_per_kernel=int(fpk),
            precision=precision,
        )

    def to_csv(self, path) -> None:
        fmt = "%.9g" if self.precision == "single" else "%.17g"
        with open(path, "w") as f:
            f.write(",".join(self.column_names()) + "\n")
            for row in self.values:
                f.write(",".join(fmt % v for v in row) + "\n")
