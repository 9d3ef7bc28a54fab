"""Binary PGM / PPM images (max value 255) for inspecting reconstructions."""

import logging
import os
from typing import List, Optional

import numpy as np

from ..errors import DimensionError, FormatError

logger = logging.getLogger(__name__)


def to_bytes(image: np.ndarray, data_range: float = 1.0) -> np.ndarray:
    """Scale to 0..255 and round to unsigned bytes, as H x W or H x W x 3."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3 and image.shape[0] in (1, 3):
        image = image[0] if image.shape[0] == 1 else image.transpose(1, 2, 0)
    if image.ndim not in (2, 3) or (image.ndim == 3 and image.shape[2] != 3):
        raise DimensionError(f"Expected a 1- or 3-channel image, got shape {image.shape}")
    return np.clip(np.rint(image / data_range * 255.0), 0, 255).astype(np.uint8)


def write_pnm(path: str, image: np.ndarray, data_range: float = 1.0) -> str:
    """P5 for one channel, P6 for three."""
    pixels = to_bytes(image, data_range)
    magic = b'P5' if pixels.ndim == 2 else b'P6'
    height, width = pixels.shape[:2]
    with open(path, 'wb') as f:
        f.write(magic + f"\n{width} {height}\n255\n".encode('ascii'))
        f.write(pixels.tobytes())
    return path


def read_pnm(path: str) -> np.ndarray:
    """Read a binary PGM/PPM back as a C x H x W float array in [0, 1]."""
    with open(path, 'rb') as f:
        raw = f.read()
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("Truncated PNM header", start)
        fields.append(raw[start:pos])
    magic, width, height, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic not in (b'P5', b'P6') or maxval != 255:
        raise FormatError(f"Unsupported PNM variant {magic!r} with max value {maxval}", 0)
    channels = 1 if magic == b'P5' else 3
    body = raw[pos + 1:]
    if len(body) != width * height * channels:
        raise FormatError(f"Expected {width * height * channels} pixel bytes, found {len(body)}", pos + 1)
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width, channels)
    return pixels.transpose(2, 0, 1).astype(np.float32) / 255.0


def save_reconstructions(out_dir: str, reconstructions: np.ndarray,
                         originals: Optional[np.ndarray] = None, prefix: str = 'recon') -> List[str]:
    """Write each reconstruction (and its original, when given) as PPM files."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i, image in enumerate(reconstructions):
        paths.append(write_pnm(os.path.join(out_dir, f"{prefix}_{i:03d}.ppm"), image))
        if originals is not None:
            paths.append(write_pnm(os.path.join(out_dir, f"{prefix}_{i:03d}_true.ppm"), originals[i]))
    logger.debug(f"Wrote {len(paths)} images to {out_dir}")
    return paths
