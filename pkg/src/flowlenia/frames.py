"""Frame formats: the binary wire message and the on-disk raw + sidecar pair.

Wire format (and ``.raw`` file payload): a 20-byte little-endian header of
five uint32 values ``(step, width, height, channels, encoding)`` followed by
the payload.  Encoding 0 (``raw``) carries ``width*height*channels``
little-endian float32 values, channel-major then row-major.  Encoding 1
(``rgb``) carries ``width*height*3`` uint8 values for thin clients.

On disk every frame also gets a JSON sidecar with the header fields, so raw
planes remain self-describing without parsing binary.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HEADER = struct.Struct("<5I")

ENCODING_RAW = 0
ENCODING_RGB = 1


@dataclass
class FrameMessage:
    step: int
    width: int
    height: int
    channels: int
    encoding: int
    payload: bytes

    def __post_init__(self):
        expected = self.expected_payload_length()
        if len(self.payload) != expected:
            raise ValueError(
                f"payload has {len(self.payload)} bytes, expected {expected}")

    def expected_payload_length(self) -> int:
        if self.encoding == ENCODING_RAW:
            return self.width * self.height * self.channels * 4
        if self.encoding == ENCODING_RGB:
            return self.width * self.height * 3
        raise ValueError(f"unknown encoding {self.encoding}")

    def to_bytes(self) -> bytes:
        return HEADER.pack(self.step, self.width, self.height,
                           self.channels, self.encoding) + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "FrameMessage":
        if len(data) < HEADER.size:
            raise ValueError("frame shorter than header")
        step, width, height, channels, encoding = HEADER.unpack_from(data)
        return cls(step=step, width=width, height=height, channels=channels,
                   encoding=encoding, payload=data[HEADER.size:])

    def to_array(self) -> np.ndarray:
        """Decode a raw frame back to (C, H, W) float32."""
        if self.encoding != ENCODING_RAW:
            raise ValueError("only raw frames decode to float arrays")
        flat = np.frombuffer(self.payload, dtype="<f4")
        return flat.reshape(self.channels, self.height, self.width)


def encode_frame(step: int, A: np.ndarray) -> FrameMessage:
    """Raw frame from matter state ``(C, H, W)``."""
    c, h, w = A.shape
    payload = np.ascontiguousarray(A, dtype="<f4").tobytes()
    return FrameMessage(step=step, width=w, height=h, channels=c,
                        encoding=ENCODING_RAW, payload=payload)


def encode_frame_rgb(step: int, rgb: np.ndarray) -> FrameMessage:
    """Composite frame from an RGB image ``(3, H, W)`` in [0, 1]."""
    _, h, w = rgb.shape
    payload = (np.clip(rgb, 0.0, 1.0) * 255).astype(np.uint8).tobytes()
    return FrameMessage(step=step, width=w, height=h, channels=3,
                        encoding=ENCODING_RGB, payload=payload)


def write_frame(directory, frame: FrameMessage) -> Path:
    """Write ``frame_<step>.raw`` plus its JSON sidecar; returns the raw path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    raw_path = directory / f"frame_{frame.step:08d}.raw"
    raw_path.write_bytes(frame.to_bytes())
    sidecar = {
        "step": frame.step,
        "width": frame.width,
        "height": frame.height,
        "channels": frame.channels,
        "encoding": "raw" if frame.encoding == ENCODING_RAW else "rgb",
    }
    raw_path.with_suffix(".json").write_text(json.dumps(sidecar) + "\n",
                                             encoding="utf-8")
    return raw_path


def read_frame(path) -> FrameMessage:
    return FrameMessage.from_bytes(Path(path).read_bytes())
