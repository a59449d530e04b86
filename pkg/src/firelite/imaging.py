"""Image decode, resize, and normalization for the inference pipeline.

The whole pipeline is pinned so an exported weight file and this engine agree:
decode to RGB8, bilinear resize with half-pixel-centered sampling, then map
x to x/127.5 - 1. `PREPROCESSING_ID` names that contract; weight files carry
the same string in their metadata and the CLI refuses a mismatch.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, DataError, DecodeError
from .tensor import Tensor

__all__ = [
    "PREPROCESSING_ID",
    "INPUT_WIDTH",
    "INPUT_HEIGHT",
    "RawImage",
    "sniff_format",
    "decode_image",
    "resize_bilinear",
    "preprocess",
]

PREPROCESSING_ID = "mobilenet_scale_127.5"
INPUT_WIDTH = 224
INPUT_HEIGHT = 224

# Magic prefixes for the sniffer; only JPEG and PNG are accepted.
_SIGNATURES = (
    (b"\xff\xd8\xff", "JPEG"),
    (b"\x89PNG\r\n\x1a\n", "PNG"),
    (b"GIF8", "GIF"),
    (b"BM", "BMP"),
    (b"II*\x00", "TIFF"),
    (b"MM\x00*", "TIFF"),
    (b"RIFF", "WEBP"),
)


@dataclass(frozen=True)
class RawImage:
    """Decoded RGB8 image, row-major, 3 bytes per pixel."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height * 3:
            raise DataError(
                f"pixel buffer holds {len(self.pixels)} bytes, "
                f"expected {self.width * self.height * 3} for {self.width}x{self.height} RGB"
            )

    def to_array(self) -> np.ndarray:
        """View as (height, width, 3) uint8."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "RawImage":
        if array.ndim != 3 or array.shape[2] != 3 or array.dtype != np.uint8:
            raise DataError(f"expected HxWx3 uint8 array, got {array.dtype} {array.shape}")
        return cls(array.shape[1], array.shape[0], array.tobytes())


def sniff_format(data: bytes) -> str:
    for prefix, name in _SIGNATURES:
        if data.startswith(prefix):
            return name
    return "unknown"


def decode_image(data: bytes) -> RawImage:
    """Decode JPEG or PNG bytes to RGB8.

    Grayscale is replicated across channels; alpha is discarded. Anything that
    is not a well-formed JPEG or PNG raises DecodeError naming the sniffed
    format.
    """
    kind = sniff_format(data)
    if kind not in ("JPEG", "PNG"):
        raise DecodeError(f"unsupported image data (sniffed as {kind}); only JPEG and PNG are accepted")
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"undecodable {kind} data: {exc}") from exc
    return RawImage(rgb.width, rgb.height, rgb.tobytes())


def resize_bilinear(img: RawImage, out_w: int, out_h: int) -> RawImage:
    """Bilinear resample with half-pixel-centered source coordinates.

    Source coordinate for output index d is (d + 0.5) * (in/out) - 0.5,
    clamped to the image; channel values round as floor(v + 0.5). At
    identical dimensions the result equals the input exactly.
    """
    if out_w < 1 or out_h < 1:
        raise ConfigError(f"resize target must be positive, got {out_w}x{out_h}")
    src = img.to_array().astype(np.float64)

    sy = np.clip((np.arange(out_h) + 0.5) * (img.height / out_h) - 0.5, 0.0, img.height - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * (img.width / out_w) - 0.5, 0.0, img.width - 1.0)
    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, img.height - 1)
    x1 = np.minimum(x0 + 1, img.width - 1)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]

    top = src[np.ix_(y0, x0)] * (1 - fx) + src[np.ix_(y0, x1)] * fx
    bot = src[np.ix_(y1, x0)] * (1 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1 - fy) + bot * fy
    rounded = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return RawImage(out_w, out_h, rounded.tobytes())


def preprocess(data: bytes) -> Tensor:
    """Encoded image bytes to the model's 1x224x224x3 input tensor.

    Values are mapped to [-1, 1] via x/127.5 - 1.
    """
    img = decode_image(data)
    if (img.width, img.height) != (INPUT_WIDTH, INPUT_HEIGHT):
        img = resize_bilinear(img, INPUT_WIDTH, INPUT_HEIGHT)
    scaled = img.to_array().astype(np.float32) / np.float32(127.5) - np.float32(1.0)
    return Tensor(scaled[np.newaxis, ...])
