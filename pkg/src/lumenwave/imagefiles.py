"""Image file handling.

PFM (32-bit float, little-endian, bottom-up rows) is the bit-exact
interchange format used for accumulated framebuffers and layer outputs.
PNG (8-bit) serves as preview output and as the ingest format for LDR
backplates and textures; PNG values are sRGB-encoded and converted to
linear on load.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

__all__ = [
    "read_pfm",
    "write_pfm",
    "read_png",
    "write_png",
    "read_image",
    "srgb_encode",
    "srgb_decode",
]


def write_pfm(path, image: np.ndarray) -> None:
    """Write an (H, W, 3) float array as little-endian color PFM."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("PFM writer expects an (H, W, 3) array")
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(b"PF\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")  # negative scale: little-endian
        f.write(np.ascontiguousarray(image[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into an (H, W, 3) float32 array."""
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header not in (b"PF", b"Pf"):
            raise ValueError(f"{path}: not a PFM file")
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        count = w * h * (3 if header == b"PF" else 1)
        data = np.frombuffer(f.read(count * 4), dtype="<f4" if scale < 0 else ">f4", count=count)
    if header == b"Pf":
        data = np.repeat(data[:, None], 3, axis=1)
    img = data.reshape(h, w, 3)[::-1]
    if abs(scale) != 1.0:
        img = img * abs(scale)
    return np.ascontiguousarray(img.astype(np.float32))


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    linear = np.clip(linear, 0.0, 1.0)
    return np.where(linear <= 0.0031308, linear * 12.92, 1.055 * np.power(linear, 1.0 / 2.4) - 0.055)


def srgb_decode(encoded: np.ndarray) -> np.ndarray:
    return np.where(encoded <= 0.04045, encoded / 12.92, np.power((encoded + 0.055) / 1.055, 2.4))


def write_png(path, image: np.ndarray) -> None:
    """sRGB-encode a linear (H, W, 3) float image and write 8-bit PNG."""
    arr = srgb_encode(np.asarray(image, dtype=np.float64))
    bytes_ = (np.round(arr * 255.0)).astype(np.uint8)
    Image.fromarray(bytes_, mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    """Read an 8-bit PNG into a linear (H, W, 3) float64 array."""
    with Image.open(path) as im:
        raw = np.asarray(im.convert("RGB"), dtype=np.float64)
    return srgb_decode(raw / 255.0)


def read_image(path) -> np.ndarray:
    """Load PFM or PNG by extension into a linear float array."""
    p = str(path)
    if p.lower().endswith(".pfm"):
        return read_pfm(p).astype(np.float64)
    if p.lower().endswith(".png"):
        return read_png(p)
    raise ValueError(f"unsupported image format: {p} (use .pfm or .png)")
