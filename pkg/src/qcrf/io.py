"""Binary file formats: unary tensors, labelings and images.

Unary tensor
    ``QCRFUNRY`` (8 bytes), u32 height, u32 width, u32 labels (little-endian),
    then ``height * width * labels`` little-endian float32 values, row-major
    with the label index fastest.
Labeling
    Binary PGM (P5); ``maxval`` is ``max(k - 1, 1)``.
Image
    Binary PGM (P5) or PPM (P6), or a ``.npy`` array.  Color is reduced to
    one luminance channel.

Superpixel maps live in :mod:`qcrf.superpix`.
"""

import re
import struct

import numpy as np

from .exceptions import FormatError, InputError
from .superpix import read_superpixel_map, write_superpixel_map  # noqa: F401  (re-export)
from .validation import check_labeling

UNARY_MAGIC = b"QCRFUNRY"
_HEADER = struct.Struct("<III")
_LUMA = np.array([0.299, 0.587, 0.114])


def write_unary(path, unary):
    """Store a cost tensor of shape (height, width, k) as float32.

    Values are rounded to float32; a tensor that already has float32 dtype
    round-trips bit for bit.
    """
    arr = np.asarray(unary)
    if arr.ndim != 3:
        raise InputError(f"unary tensor must be 3-D, got shape {arr.shape}")
    h, w, k = arr.shape
    with open(path, "wb") as fh:
        fh.write(UNARY_MAGIC)
        fh.write(_HEADER.pack(h, w, k))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_unary(path):
    """Load a cost tensor written by :func:`write_unary` (dtype float32)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != UNARY_MAGIC:
        raise FormatError("bad unary tensor magic", 0)
    header_end = 8 + _HEADER.size
    if len(data) < header_end:
        raise FormatError("truncated unary tensor header", len(data))
    h, w, k = _HEADER.unpack_from(data, 8)
    if h == 0 or w == 0:
        raise FormatError(f"invalid tensor dimensions {h}x{w}", 8)
    if k < 2:
        raise FormatError(f"unary tensor needs at least two labels, got {k}", 16)
    count = h * w * k
    expected = header_end + 4 * count
    if len(data) < expected:
        raise FormatError("truncated unary tensor data", len(data))
    if len(data) > expected:
        raise FormatError("trailing bytes after unary tensor", expected)
    return np.frombuffer(data, dtype="<f4", count=count, offset=header_end).reshape(h, w, k).astype(np.float32)


def _pnm_header(data, magics):
    # magic, width, height, maxval separated by whitespace; '#' starts a comment
    tokens = []
    pos = 0
    token_re = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")
    for _ in range(4):
        match = token_re.match(data, pos)
        if match is None:
            raise FormatError("truncated PNM header", len(data))
        tokens.append((match.group(1), match.start(1)))
        pos = match.end()
    magic, magic_at = tokens[0]
    if magic not in magics:
        raise FormatError(f"unsupported PNM magic {magic!r}", magic_at)
    values = []
    for tok, at in tokens[1:]:
        if not tok.isdigit():
            raise FormatError(f"invalid PNM header field {tok!r}", at)
        values.append(int(tok))
    w, h, maxval = values
    if w == 0 or h == 0:
        raise FormatError(f"invalid PNM dimensions {w}x{h}", tokens[1][1])
    if not 1 <= maxval <= 65535:
        raise FormatError(f"invalid PNM maxval {maxval}", tokens[3][1])
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("missing whitespace after PNM header", pos)
    return magic, h, w, maxval, pos + 1


def _pnm_pixels(data, offset, count, maxval):
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    expected = offset + count * dtype.itemsize
    if len(data) < expected:
        raise FormatError("truncated PNM pixel data", len(data))
    if len(data) > expected:
        raise FormatError("trailing bytes after PNM pixel data", expected)
    return np.frombuffer(data, dtype=dtype, count=count, offset=offset)


def write_labeling(path, labels, n_labels=None):
    """Store a labeling as binary PGM with ``maxval = max(k - 1, 1)``."""
    labels = check_labeling(labels)
    k = int(labels.max()) + 1 if n_labels is None else int(n_labels)
    if labels.max() >= k:
        raise InputError(f"label {labels.max()} out of range for {k} labels")
    if k > 256:
        raise InputError("PGM labelings support at most 256 labels")
    h, w = labels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{max(k - 1, 1)}\n".encode("ascii"))
        fh.write(labels.astype(np.uint8).tobytes())


def read_labeling(path):
    """Load a PGM labeling as an int64 array of shape (height, width)."""
    with open(path, "rb") as fh:
        data = fh.read()
    _, h, w, maxval, offset = _pnm_header(data, (b"P5",))
    return _pnm_pixels(data, offset, h * w, maxval).reshape(h, w).astype(np.int64)


def read_image(path):
    """Load a gray image in [0, 255] from PGM, PPM or ``.npy``.

    PPM colors are reduced to luminance ``0.299 R + 0.587 G + 0.114 B``;
    16-bit images are rescaled to [0, 255].
    """
    path = str(path)
    if path.endswith(".npy"):
        arr = np.load(path)
        if arr.ndim == 3:
            arr = np.clip(arr @ _LUMA, 0.0, 255.0)
        return np.asarray(arr, dtype=np.float64)
    with open(path, "rb") as fh:
        data = fh.read()
    magic, h, w, maxval, offset = _pnm_header(data, (b"P5", b"P6"))
    channels = 3 if magic == b"P6" else 1
    pix = _pnm_pixels(data, offset, h * w * channels, maxval).astype(np.float64)
    pix *= 255.0 / maxval
    img = pix.reshape(h, w, channels)
    return img[..., 0] if channels == 1 else np.clip(img @ _LUMA, 0.0, 255.0)


def write_image(path, image):
    """Store a gray image as 8-bit PGM (values rounded and clipped)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise InputError("write_image expects a 2-D gray image")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.clip(np.rint(img), 0, 255).astype(np.uint8).tobytes())
