"""Dataset model, text-format ingestion, and synthetic generators.

Supports the equal-length subset of the community ``.ts`` text format and
plain CSV.  Variable-length series are rejected.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from ._binio import (
    read_array,
    read_header,
    read_str,
    read_values,
    write_array,
    write_header,
    write_str,
    write_values,
)

_CACHE_MAGIC = b"RKDS"
_CACHE_VERSION = 1


class ParseError(ValueError):
    """Input text could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(message + where)


@dataclass
class Dataset:
    """A block of equal-length series: (n_instances, n_channels, l_series)."""

    values: np.ndarray
    labels: list | None = None
    name: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 3:
            raise ValueError("values must have shape (n_instances, n_channels, l_series)")
        if self.labels is not None:
            self.labels = [str(lab) for lab in self.labels]
            if len(self.labels) != self.values.shape[0]:
                raise ValueError("one label per instance is required")

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def l_series(self) -> int:
        return self.values.shape[2]


def _as_lines(source):
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        return source.splitlines()
    return io.TextIOWrapper(source, encoding="utf-8").read().splitlines() if hasattr(
        source, "read"
    ) else list(source)


def _parse_bool(token: str, lineno: int) -> bool:
    low = token.strip().lower()
    if low == "true":
        return True
    if low == "false":
        return False
    raise ParseError(f"expected true/false, got {token!r}", lineno)


def _parse_float(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"malformed number {token.strip()!r}", lineno) from None


def parse_ts(source, dtype=np.float32) -> Dataset:
    """Parse the equal-length subset of the ``.ts`` text format.

    Handled directives: @problemName, @univariate, @dimension(s),
    @equalLength, @seriesLength, @classLabel, @data.  Lines starting with
    '#' are comments.  Data lines hold colon-separated channels of
    comma-separated values, with the class label after the final colon
    when @classLabel declares labels.
    """
    lines = _as_lines(source)
    name = ""
    univariate = None
    dimensions = None
    series_length = None
    has_labels = False
    class_labels: list = []
    in_data = False
    data_start = None

    instances = []
    labels = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not in_data and line.startswith("@"):
            parts = line.split()
            directive = parts[0].lower()
            args = parts[1:]
            if directive == "@problemname":
                name = args[0] if args else ""
            elif directive == "@univariate":
                univariate = _parse_bool(args[0], lineno) if args else True
            elif directive in ("@dimension", "@dimensions"):
                try:
                    dimensions = int(args[0])
                except (IndexError, ValueError):
                    raise ParseError("@dimension needs an integer argument", lineno) from None
            elif directive == "@equallength":
                if args and not _parse_bool(args[0], lineno):
                    raise ParseError("only equal-length datasets are supported", lineno)
            elif directive == "@serieslength":
                try:
                    series_length = int(args[0])
                except (IndexError, ValueError):
                    raise ParseError("@seriesLength needs an integer argument", lineno) from None
            elif directive == "@classlabel":
                if args:
                    has_labels = _parse_bool(args[0], lineno)
                    class_labels = args[1:]
            elif directive == "@data":
                in_data = True
                data_start = lineno
            # Unknown directives are ignored for compatibility.
            continue
        if not in_data:
            raise ParseError("value line before @data", lineno)

        segments = line.split(":")
        if has_labels:
            if len(segments) < 2:
                raise ParseError("missing class label after final ':'", lineno)
            label = segments[-1].strip()
            if class_labels and label not in class_labels:
                raise ParseError(f"unknown class label {label!r}", lineno)
            segments = segments[:-1]
            labels.append(label)
        channels = []
        for seg in segments:
            channels.append([_parse_float(tok, lineno) for tok in seg.split(",")])
        if dimensions is not None and len(channels) != dimensions:
            raise ParseError(
                f"expected {dimensions} channels, got {len(channels)}", lineno
            )
        if univariate and len(channels) != 1:
            raise ParseError("multiple channels in a @univariate dataset", lineno)
        lengths = {len(ch) for ch in channels}
        if len(lengths) != 1:
            raise ParseError("channels of unequal length", lineno)
        (length,) = lengths
        if series_length is not None and length != series_length:
            raise ParseError(
                f"series length {length} does not match @seriesLength {series_length}", lineno
            )
        if instances and len(instances[0]) != len(channels):
            raise ParseError("channel count differs from previous instances", lineno)
        if instances and len(instances[0][0]) != length:
            raise ParseError("series length differs from previous instances", lineno)
        instances.append(channels)

    if not in_data:
        raise ParseError("missing @data section", data_start or len(lines) or 1)

    if instances:
        values = np.asarray(instances, dtype=dtype)
    else:
        values = np.zeros((0, dimensions or 1, series_length or 0), dtype=dtype)
    return Dataset(values=values, labels=labels if has_labels else None, name=name)


def write_ts(dataset: Dataset, path) -> None:
    """Serialize a Dataset into the supported ``.ts`` subset."""
    with open(path, "w") as f:
        if dataset.name:
            f.write(f"@problemName {dataset.name}\n")
        f.write(f"@univariate {'true' if dataset.n_channels == 1 else 'false'}\n")
        f.write(f"@dimension {dataset.n_channels}\n")
        f.write("@equalLength true\n")
        f.write(f"@seriesLength {dataset.l_series}\n")
        if dataset.labels is not None:
            uniq = sorted(set(dataset.labels))
            f.write("@classLabel true " + " ".join(uniq) + "\n")
        else:
            f.write("@classLabel false\n")
        f.write("@data\n")
        for i in range(dataset.n_instances):
            chans = ":".join(
                ",".join(f"{v:.17g}" for v in dataset.values[i, c])
                for c in range(dataset.n_channels)
            )
            if dataset.labels is not None:
                chans += f":{dataset.labels[i]}"
            f.write(chans + "\n")


def parse_csv(source, has_labels: bool = False, dtype=np.float32) -> Dataset:
    """Parse univariate CSV: one instance per row, label last when present."""
    lines = [ln for ln in _as_lines(source)]
    rows = []
    labels = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split(",")
        if has_labels:
            if len(tokens) < 2:
                raise ParseError("row too short to carry a label", lineno)
            labels.append(tokens[-1].strip())
            tokens = tokens[:-1]
        row = [_parse_float(tok, lineno) for tok in tokens]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"ragged row: expected {width} values, got {len(row)}", lineno)
        rows.append(row)
    if rows:
        values = np.asarray(rows, dtype=dtype)[:, np.newaxis, :]
    else:
        values = np.zeros((0, 1, 0), dtype=dtype)
    return Dataset(values=values, labels=labels if has_labels else None)


def write_csv(dataset: Dataset, path) -> None:
    if dataset.n_channels != 1:
        raise ValueError("CSV export supports univariate datasets only")
    with open(path, "w") as f:
        for i in range(dataset.n_instances):
            row = ",".join(f"{v:.17g}" for v in dataset.values[i, 0])
            if dataset.labels is not None:
                row += f",{dataset.labels[i]}"
            f.write(row + "\n")


def save_cache(dataset: Dataset, path) -> None:
    """Binary dataset cache with the shared header conventions."""
    with open(path, "wb") as f:
        write_header(f, _CACHE_MAGIC, _CACHE_VERSION)
        tag = 0 if dataset.values.dtype == np.float32 else 1
        write_values(
            f,
            "QQQBB",
            dataset.n_instances,
            dataset.n_channels,
            dataset.l_series,
            tag,
            1 if dataset.labels is not None else 0,
        )
        write_str(f, dataset.name)
        write_array(f, dataset.values.astype(np.float32 if tag == 0 else np.float64))
        if dataset.labels is not None:
            for lab in dataset.labels:
                write_str(f, lab)


def load_cache(path) -> Dataset:
    with open(path, "rb") as f:
        read_header(f, _CACHE_MAGIC, _CACHE_VERSION)
        n, c, l, tag, has_labels = read_values(f, "QQQBB")
        name = read_str(f)
        dtype = np.float32 if tag == 0 else np.float64
        values = read_array(f, dtype, int(n * c * l)).reshape(int(n), int(c), int(l))
        labels = [read_str(f) for _ in range(n)] if has_labels else None
    return Dataset(values=values, labels=labels, name=name)


def load_dataset(path, csv_labels: bool = False, dtype=np.float32) -> Dataset:
    """Load a dataset by file suffix: .ts, .csv, or the binary cache."""
    text_suffix = str(path).lower()
    if text_suffix.endswith(".ts"):
        with open(path, "rb") as f:
            ds = parse_ts(f.read(), dtype=dtype)
        if not ds.name:
            ds.name = str(path)
        return ds
    if text_suffix.endswith(".csv"):
        with open(path, "rb") as f:
            return parse_csv(f.read(), has_labels=csv_labels, dtype=dtype)
    return load_cache(path)


def synth_random(n_instances: int, n_channels: int, l_series: int, seed: int) -> Dataset:
    """Standard-normal random dataset, deterministic in the seed."""
    if n_instances < 1 or n_channels < 1 or l_series < 1:
        raise ValueError("all dataset dimensions must be positive")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    values = rng.standard_normal((n_instances, n_channels, l_series)).astype(np.float32)
    return Dataset(values=values, name=f"synth_random_{n_instances}x{n_channels}x{l_series}")


def synth_two_class(
    n_per_class: int, l_series: int, seed: int, noise_sigma: float = 0.1
) -> Dataset:
    """Labeled two-class fixture: sines of period l/4 vs l/8 plus noise."""
    if n_per_class < 1 or l_series < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    t = np.arange(l_series, dtype=np.float64)
    bases = [
        np.sin(2.0 * np.pi * t / (l_series / 4.0)),
        np.sin(2.0 * np.pi * t / (l_series / 8.0)),
    ]
    values = np.empty((2 * n_per_class, 1, l_series), dtype=np.float32)
    labels = []
    for cls, base in enumerate(bases):
        for i in range(n_per_class):
            noise = rng.standard_normal(l_series) * noise_sigma
            values[cls * n_per_class + i, 0] = (base + noise).astype(np.float32)
            labels.append(str(cls))
    return Dataset(values=values, labels=labels, name="synth_two_class")
