"""8-bit image model, binary PNM (P5/P6) I/O, colorspace conversion, and
area-averaged resizing.

Rounding rule used throughout the toolkit: round half up on non-negative
values, i.e. floor(x + 0.5).  It applies to to_gray and resize_area.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FormatError

_WHITESPACE = b" \t\n\r\x0b\x0c"


def round_half_up(x):
    """floor(x + 0.5) for non-negative scalars or arrays."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


@dataclass(frozen=True, eq=False)
class Raster:
    """W x H image with 1 (gray) or 3 (RGB) channels of 8-bit samples.

    samples is a flat row-major uint8 array of length width*height*channels;
    for RGB the channels interleave per pixel (R, G, B).
    """

    width: int
    height: int
    channels: int
    samples: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"raster dimensions must be >= 1, got {self.width}x{self.height}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        samples = np.ascontiguousarray(self.samples, dtype=np.uint8)
        if samples.ndim != 1 or samples.size != self.width * self.height * self.channels:
            raise ValueError(
                f"samples length {samples.size} != width*height*channels "
                f"= {self.width * self.height * self.channels}"
            )
        object.__setattr__(self, "samples", samples)

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.channels == other.channels
            and np.array_equal(self.samples, other.samples)
        )

    def to_array(self) -> np.ndarray:
        """Samples as (height, width) or (height, width, 3)."""
        if self.channels == 1:
            return self.samples.reshape(self.height, self.width)
        return self.samples.reshape(self.height, self.width, 3)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Raster":
        a = np.asarray(arr, dtype=np.uint8)
        if a.ndim == 2:
            return cls(a.shape[1], a.shape[0], 1, a.reshape(-1))
        if a.ndim == 3 and a.shape[2] == 3:
            return cls(a.shape[1], a.shape[0], 3, a.reshape(-1))
        raise ValueError(f"expected (h, w) or (h, w, 3) array, got shape {a.shape}")


@dataclass(frozen=True, eq=False)
class HsvRaster:
    """Per-pixel hue [0, 360), saturation [0, 1], value [0, 1] planes."""

    width: int
    height: int
    h: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        n = self.width * self.height
        for name in ("h", "s", "v"):
            plane = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if plane.ndim != 1 or plane.size != n:
                raise ValueError(f"{name} plane length {plane.size} != width*height = {n}")
            object.__setattr__(self, name, plane)
        if np.any((self.h < 0) | (self.h >= 360)):
            raise ValueError("hue entries must lie in [0, 360)")
        if np.any((self.s < 0) | (self.s > 1)) or np.any((self.v < 0) | (self.v > 1)):
            raise ValueError("saturation and value entries must lie in [0, 1]")


class _Scanner:
    """Byte scanner over a PNM header: whitespace-separated ASCII tokens,
    '#' comments running to end of line."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_separators(self):
        data = self.data
        while self.pos < len(data):
            b = data[self.pos : self.pos + 1]
            if b in (b"#",):
                nl = data.find(b"\n", self.pos)
                self.pos = len(data) if nl < 0 else nl + 1
            elif b in _WHITESPACE and b:
                self.pos += 1
            else:
                return

    def token(self, what: str) -> bytes:
        self.skip_separators()
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos : self.pos + 1] not in _WHITESPACE:
            self.pos += 1
        if self.pos == start:
            raise FormatError(f"missing {what} token at byte {start}")
        return data[start : self.pos]

    def int_token(self, what: str) -> int:
        start = self.pos
        tok = self.token(what)
        try:
            value = int(tok.decode("ascii"))
        except (UnicodeDecodeError, ValueError):
            raise FormatError(f"invalid {what} token {tok!r} at byte {start}") from None
        return value


def load_pnm(data: bytes) -> Raster:
    """Parse a binary PGM (P5) or PPM (P6) stream with maxval 255.

    Raises FormatError naming the offending byte offset on malformed
    headers, wrong maxval, or truncated/overlong payloads.
    """
    scan = _Scanner(data)
    magic = scan.token("magic")
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported magic {magic!r} at byte 0 (expected P5 or P6)")
    channels = 1 if magic == b"P5" else 3
    width = scan.int_token("width")
    height = scan.int_token("height")
    if width < 1 or height < 1:
        raise FormatError(f"non-positive dimensions {width}x{height} in header")
    maxval_at = scan.pos
    maxval = scan.int_token("maxval")
    if maxval != 255:
        raise FormatError(f"maxval must be 255, got {maxval} at byte {maxval_at}")
    if scan.pos >= len(data) or data[scan.pos : scan.pos + 1] not in _WHITESPACE:
        raise FormatError(f"expected single whitespace byte before payload at byte {scan.pos}")
    payload_at = scan.pos + 1
    expected = width * height * channels
    payload = data[payload_at:]
    if len(payload) < expected:
        raise FormatError(
            f"truncated payload: expected {expected} bytes from byte {payload_at}, got {len(payload)}"
        )
    if len(payload) > expected:
        raise FormatError(f"trailing data after payload at byte {payload_at + expected}")
    samples = np.frombuffer(payload, dtype=np.uint8)
    return Raster(width, height, channels, samples)


def write_pnm(r: Raster) -> bytes:
    """Serialize to binary PGM/PPM; load_pnm(write_pnm(r)) == r."""
    magic = "P5" if r.channels == 1 else "P6"
    header = f"{magic}\n{r.width} {r.height}\n255\n".encode("ascii")
    return header + r.samples.tobytes()


def to_gray(r: Raster) -> Raster:
    """Luma conversion round(0.299 R + 0.587 G + 0.114 B); identity on gray."""
    if r.channels == 1:
        return r
    rgb = r.to_array().astype(np.float64)
    gray = round_half_up(0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2])
    return Raster.from_array(gray.astype(np.uint8))


def to_hsv(r: Raster) -> HsvRaster:
    """Standard RGB -> HSV: V = max/255, S = (max-min)/max (0 when max=0),
    H by the sector formula in degrees [0, 360)."""
    if r.channels != 3:
        raise ValueError(f"to_hsv requires an RGB raster, got {r.channels} channel(s)")
    rgb = r.to_array().astype(np.float64)
    red, green, blue = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=2)
    mn = rgb.min(axis=2)
    delta = mx - mn
    v = mx / 255.0
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
        safe = np.where(delta > 0, delta, 1.0)
        h = np.select(
            [delta == 0, mx == red, mx == green],
            [
                np.zeros_like(mx),
                60.0 * (((green - blue) / safe) % 6.0),
                60.0 * (((blue - red) / safe) + 2.0),
            ],
            default=60.0 * (((red - green) / safe) + 4.0),
        )
    h = np.where(h >= 360.0, h - 360.0, h)
    return HsvRaster(r.width, r.height, h.reshape(-1), s.reshape(-1), v.reshape(-1))


def box_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) matrix of box-overlap lengths for 1-D area resampling.

    Row j holds the lengths of the intersections of input cells with the
    output box [j*n_in/n_out, (j+1)*n_in/n_out).
    """
    w = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for j in range(n_out):
        start = j * scale
        end = (j + 1) * scale
        i0 = int(np.floor(start))
        i1 = min(int(np.ceil(end)), n_in)
        for i in range(i0, i1):
            overlap = min(end, i + 1) - max(start, i)
            if overlap > 0:
                w[j, i] = overlap
    return w


def resize_area(r: Raster, out_w: int, out_h: int) -> Raster:
    """Box-filter resize: each output sample is the area-weighted mean of
    the covered input box, rounded half up."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {out_w}x{out_h}")
    wy = box_weights(r.height, out_h)
    wx = box_weights(r.width, out_w)
    area = np.outer(wy.sum(axis=1), wx.sum(axis=1))
    arr = r.to_array().astype(np.float64)
    if r.channels == 1:
        out = round_half_up(wy @ arr @ wx.T / area)
    else:
        planes = [round_half_up(wy @ arr[..., c] @ wx.T / area) for c in range(3)]
        out = np.stack(planes, axis=2)
    return Raster.from_array(np.clip(out, 0, 255).astype(np.uint8))
