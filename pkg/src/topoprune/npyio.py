"""Reader and writer for 2-D arrays in the NPY v1.0 format.

Only what weight exchange needs is supported: little-endian float32/float64
weights, unsigned-byte masks, C order, exactly two dimensions.
"""

import ast
import struct

import numpy as np

__all__ = [
    "NpyFormatError",
    "read_npy",
    "read_npy_array",
    "read_mask",
    "write_npy",
    "write_mask",
]

MAGIC = b"\x93NUMPY"
WEIGHT_DESCRS = ("<f4", "<f8")
MASK_DESCRS = ("|u1",)
_ALIGN = 64


class NpyFormatError(ValueError):
    """Unsupported or malformed NPY file. ``code`` names the failed check."""

    def __init__(self, code, message):
        self.code = code
        super().__init__(f"{code}: {message}")


def _parse_header(fh, path):
    prefix = fh.read(10)
    if len(prefix) < 10 or prefix[:6] != MAGIC:
        raise NpyFormatError("bad-magic", f"{path} is not an NPY file")
    major, minor = prefix[6], prefix[7]
    if (major, minor) != (1, 0):
        raise NpyFormatError("unsupported-version", f"NPY version {major}.{minor}; only 1.0 is read")
    (header_len,) = struct.unpack("<H", prefix[8:10])
    raw = fh.read(header_len)
    if len(raw) != header_len:
        raise NpyFormatError("truncated", f"{path}: header shorter than declared")
    try:
        header = ast.literal_eval(raw.decode("latin1"))
    except (SyntaxError, ValueError) as exc:
        raise NpyFormatError("bad-header", f"{path}: cannot parse header ({exc})") from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise NpyFormatError("bad-header", f"{path}: header must hold descr, fortran_order, shape")
    return header


def read_npy_array(path, descrs=WEIGHT_DESCRS + MASK_DESCRS):
    """Read a 2-D NPY v1.0 array, keeping its stored dtype.

    Raises
    ------
    NpyFormatError
        With ``code`` one of ``bad-magic``, ``unsupported-version``,
        ``bad-header``, ``unsupported-dtype``, ``unsupported-layout``,
        ``expected-2d`` or ``truncated``.
    """
    with open(path, "rb") as fh:
        header = _parse_header(fh, path)
        descr = header["descr"]
        if descr not in descrs:
            raise NpyFormatError("unsupported-dtype", f"descr {descr!r}; expected one of {descrs}")
        if header["fortran_order"] is not False:
            raise NpyFormatError("unsupported-layout", "fortran_order=True is not supported")
        shape = header["shape"]
        if not isinstance(shape, tuple) or len(shape) != 2:
            raise NpyFormatError("expected-2d", f"expected 2-D array, got shape {shape!r}")
        dtype = np.dtype(descr)
        count = shape[0] * shape[1]
        data = fh.read(count * dtype.itemsize)
        if len(data) != count * dtype.itemsize:
            raise NpyFormatError("truncated", f"{path}: expected {count} values")
    return np.frombuffer(data, dtype=dtype).reshape(shape).copy()


def read_npy(path):
    """Read a layer's weights as a float64 matrix."""
    return read_npy_array(path, WEIGHT_DESCRS).astype(np.float64)


def read_mask(path):
    return read_npy_array(path, MASK_DESCRS)


def _header_bytes(descr, shape):
    text = "{'descr': %r, 'fortran_order': False, 'shape': %r, }" % (descr, tuple(shape))
    # magic(6) + version(2) + length(2) + header + newline, padded to the alignment
    pad = -(10 + len(text) + 1) % _ALIGN
    text = text + " " * pad + "\n"
    return MAGIC + bytes([1, 0]) + struct.pack("<H", len(text)) + text.encode("latin1")


def write_npy(path, array, descr=None):
    """Write a 2-D array as NPY v1.0.

    ``descr`` defaults to ``<f8`` for floats and ``|u1`` for unsigned bytes
    and booleans.
    """
    arr = np.asarray(array)
    if arr.ndim != 2:
        raise NpyFormatError("expected-2d", f"expected 2-D array, got shape {arr.shape}")
    if descr is None:
        descr = "|u1" if arr.dtype in (np.uint8, np.bool_) else "<f8"
    if descr not in WEIGHT_DESCRS + MASK_DESCRS:
        raise NpyFormatError("unsupported-dtype", f"cannot write descr {descr!r}")
    out = np.ascontiguousarray(arr, dtype=np.dtype(descr))
    with open(path, "wb") as fh:
        fh.write(_header_bytes(descr, out.shape))
        fh.write(out.tobytes(order="C"))


def write_mask(path, mask):
    """Write a 0/1 mask (array or object with ``bits``) as ``|u1``."""
    bits = np.asarray(getattr(mask, "bits", mask))
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("mask entries must be 0 or 1")
    write_npy(path, bits.astype(np.uint8), "|u1")
