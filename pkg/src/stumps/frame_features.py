"""Per-frame descriptors: FDESC/LDESC file IO, color-histogram concept
scoring, BoW quantization and per-shot aggregation.

FDESC files are UTF-8 text: header ``FDESC v1 <n_frames> <n_concepts>
<bow_dim>`` followed by one line per frame with the frame index, the concept
scores and (when bow_dim > 0) the BoW vector. LDESC files carry local
descriptors: header ``LDESC v1 <dim>``, then ``<frame_index> <d_1..d_dim>``
with many lines per frame allowed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CONCEPTS,
    N_CONCEPTS,
    DescriptorFormatError,
    ModelFormatError,
    fmt_float,
)
from .learners import Codebook, quantize

FDESC_HEADER = "FDESC v1"
LDESC_HEADER = "LDESC v1"
CONCEPTS_HEADER = "STUMPS-CONCEPTS v1"

HSV_BINS = (8, 8, 4)
N_COLOR_BINS = HSV_BINS[0] * HSV_BINS[1] * HSV_BINS[2]


@dataclass(frozen=True)
class FrameDescriptor:
    frame_index: int
    concept_scores: np.ndarray  # (N_CONCEPTS,), pixel fractions
    bow: np.ndarray | None = None  # L1-normalized, optional

    def __post_init__(self):
        cs = self.concept_scores
        if cs.shape != (N_CONCEPTS,):
            raise ValueError(f"concept_scores must have shape ({N_CONCEPTS},)")
        if np.any(cs < -1e-12) or np.any(cs > 1 + 1e-6) or cs.sum() > 1 + 1e-6:
            raise ValueError("concept scores must be pixel fractions summing to <= 1")
        if self.bow is not None:
            s = self.bow.sum()
            if s > 0 and abs(s - 1.0) > 1e-6:
                raise ValueError("bow vector must be L1-normalized or zero")


def write_descriptors(frames: list[FrameDescriptor], path) -> None:
    bow_dim = 0
    if frames and frames[0].bow is not None:
        bow_dim = len(frames[0].bow)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{FDESC_HEADER} {len(frames)} {N_CONCEPTS} {bow_dim}\n")
        for f in frames:
            parts = [str(f.frame_index)] + [fmt_float(v) for v in f.concept_scores]
            if bow_dim:
                if f.bow is None or len(f.bow) != bow_dim:
                    raise ValueError("bow present on some frames but not others")
                parts += [fmt_float(v) for v in f.bow]
            elif f.bow is not None:
                raise ValueError("bow present on some frames but not others")
            fh.write(" ".join(parts) + "\n")


def read_descriptors(path) -> list[FrameDescriptor]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DescriptorFormatError("empty descriptor file")
    header = lines[0].split()
    if len(header) != 5 or " ".join(header[:2]) != FDESC_HEADER:
        raise DescriptorFormatError(f"version mismatch: expected '{FDESC_HEADER}' header")
    n_frames, n_concepts, bow_dim = (int(v) for v in header[2:])
    if n_concepts != N_CONCEPTS:
        raise DescriptorFormatError(
            f"concept count mismatch: file has {n_concepts}, expected {N_CONCEPTS}"
        )
    rows = [ln for ln in lines[1:] if ln.strip()]
    if len(rows) != n_frames:
        raise DescriptorFormatError(
            f"frame count mismatch: header says {n_frames}, file has {len(rows)}"
        )
    frames: list[FrameDescriptor] = []
    prev_index = -1
    for line_no, line in enumerate(rows, start=2):
        parts = line.split()
        if len(parts) != 1 + n_concepts + bow_dim:
            raise DescriptorFormatError(f"line {line_no}: wrong field count")
        try:
            idx = int(parts[0])
            values = np.array([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise DescriptorFormatError(f"line {line_no}: {exc}") from exc
        if not np.all(np.isfinite(values)):
            raise DescriptorFormatError(f"line {line_no}: non-finite value")
        if idx <= prev_index:
            raise DescriptorFormatError(f"line {line_no}: frame indices not strictly increasing")
        prev_index = idx
        bow = values[n_concepts:] if bow_dim else None
        try:
            frames.append(
                FrameDescriptor(frame_index=idx, concept_scores=values[:n_concepts], bow=bow)
            )
        except ValueError as exc:
            raise DescriptorFormatError(f"line {line_no}: {exc}") from exc
    return frames


def write_local_descriptors(rows: list[tuple[int, np.ndarray]], dim: int, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{LDESC_HEADER} {dim}\n")
        for frame_index, vec in rows:
            fh.write(f"{frame_index} " + " ".join(fmt_float(v) for v in vec) + "\n")


def read_local_descriptors(path) -> tuple[int, list[tuple[int, np.ndarray]]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(LDESC_HEADER):
        raise DescriptorFormatError(f"version mismatch: expected '{LDESC_HEADER}' header")
    dim = int(lines[0].split()[2])
    rows: list[tuple[int, np.ndarray]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise DescriptorFormatError(f"line {line_no}: expected {dim} values")
        rows.append((int(parts[0]), np.array([float(v) for v in parts[1:]])))
    return dim, rows


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorized uint8 RGB -> HSV with all channels in [0, 1]."""
    arr = rgb.astype(float) / 255.0
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    maxc = arr.max(axis=-1)
    minc = arr.min(axis=-1)
    delta = maxc - minc
    h = np.zeros_like(maxc)
    mask = delta > 0
    rm = mask & (maxc == r)
    gm = mask & (maxc == g) & ~rm
    bm = mask & ~rm & ~gm
    h[rm] = ((g[rm] - b[rm]) / delta[rm]) % 6.0
    h[gm] = (b[gm] - r[gm]) / delta[gm] + 2.0
    h[bm] = (r[bm] - g[bm]) / delta[bm] + 4.0
    h /= 6.0
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    return np.stack([h, s, maxc], axis=-1)


def hsv_bin_indices(rgb: np.ndarray) -> np.ndarray:
    """Flat 8x8x4 HSV bin index per pixel."""
    hsv = rgb_to_hsv(rgb)
    hb, sb, vb = HSV_BINS
    hi = np.minimum((hsv[..., 0] * hb).astype(int), hb - 1)
    si = np.minimum((hsv[..., 1] * sb).astype(int), sb - 1)
    vi = np.minimum((hsv[..., 2] * vb).astype(int), vb - 1)
    return hi * (sb * vb) + si * vb + vi


@dataclass(frozen=True)
class ConceptModel:
    histograms: np.ndarray  # (N_CONCEPTS, N_COLOR_BINS), each a distribution
    background: float  # uniform per-bin likelihood for unexplained pixels

    def __post_init__(self):
        if self.histograms.shape != (N_CONCEPTS, N_COLOR_BINS):
            raise ValueError("histogram shape mismatch")
        if np.any(np.abs(self.histograms.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("each concept histogram must be a distribution")


def train_concept_model(examples: dict[str, np.ndarray]) -> ConceptModel:
    """Build per-concept color histograms from labelled example pixel regions
    (uint8 RGB arrays), with add-one smoothing."""
    histograms = np.zeros((N_CONCEPTS, N_COLOR_BINS))
    for ci, concept in enumerate(CONCEPTS):
        pixels = examples.get(concept)
        if pixels is None or pixels.size == 0:
            raise ValueError(f"no example pixels for concept {concept}")
        bins = hsv_bin_indices(pixels.reshape(-1, 3))
        counts = np.bincount(bins, minlength=N_COLOR_BINS).astype(float)
        histograms[ci] = (counts + 1.0) / (counts.sum() + N_COLOR_BINS)
    return ConceptModel(histograms=histograms, background=1.0 / N_COLOR_BINS)


def concept_scores_from_image(image: np.ndarray, model: ConceptModel) -> np.ndarray:
    """Fraction of pixels whose color is most likely under each concept's
    histogram; pixels better explained by the uniform background count for
    no concept."""
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] < 8 or image.shape[1] < 8:
        raise ValueError("image must be RGB with dimensions >= 8x8")
    bins = hsv_bin_indices(image).ravel()
    likelihoods = model.histograms[:, bins]  # (N_CONCEPTS, n_pixels)
    best = np.argmax(likelihoods, axis=0)
    best_val = likelihoods[best, np.arange(len(bins))]
    assigned = best_val > model.background
    scores = np.zeros(N_CONCEPTS)
    for ci in range(N_CONCEPTS):
        scores[ci] = np.count_nonzero(assigned & (best == ci)) / len(bins)
    return scores


def decode_ppm(data: bytes) -> np.ndarray:
    """Decode a binary PPM (P6, maxval 255) into an (H, W, 3) uint8 array."""
    if not data.startswith(b"P6"):
        raise ValueError("only binary PPM (P6) images are supported")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError("only maxval 255 PPM images are supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=pos)
    if pixels.size != width * height * 3:
        raise ValueError("truncated PPM pixel data")
    return pixels.reshape(height, width, 3)


def encode_ppm(image: np.ndarray) -> bytes:
    h, w, _ = image.shape
    return f"P6\n{w} {h}\n255\n".encode() + image.astype(np.uint8).tobytes()


def bow_from_local_descriptors(descriptors, codebook: Codebook) -> np.ndarray:
    """L1-normalized histogram of nearest-center assignments; empty input
    yields the zero vector."""
    hist = np.zeros(codebook.k)
    for d in descriptors:
        hist[quantize(d, codebook)] += 1.0
    total = hist.sum()
    return hist / total if total > 0 else hist


@dataclass(frozen=True)
class ShotDescriptor:
    start: int
    end: int  # exclusive
    concept_scores: np.ndarray
    bow: np.ndarray | None


def shot_descriptor(frames: list[FrameDescriptor], interval: tuple[int, int]) -> ShotDescriptor:
    """Arithmetic mean of the member frames' vectors over [start, end)."""
    start, end = interval
    if not 0 <= start < end <= len(frames):
        raise ValueError(f"empty or out-of-range interval {interval}")
    members = frames[start:end]
    has_bow = [f.bow is not None for f in members]
    if any(has_bow) and not all(has_bow):
        raise ValueError("bow present on some member frames but not all")
    concept = np.mean([f.concept_scores for f in members], axis=0)
    bow = np.mean([f.bow for f in members], axis=0) if all(has_bow) else None
    return ShotDescriptor(start=start, end=end, concept_scores=concept, bow=bow)


def save_concept_model(model: ConceptModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CONCEPTS_HEADER + "\n")
        fh.write("concepts " + " ".join(CONCEPTS) + "\n")
        fh.write("bins " + " ".join(str(b) for b in HSV_BINS) + "\n")
        fh.write("background " + fmt_float(model.background) + "\n")
        for ci, concept in enumerate(CONCEPTS):
            fh.write(f"hist {concept} " + " ".join(fmt_float(v) for v in model.histograms[ci]) + "\n")


def load_concept_model(path) -> ConceptModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CONCEPTS_HEADER:
        raise ModelFormatError(f"expected header '{CONCEPTS_HEADER}'")
    background = float(lines[3].split()[1])
    histograms = np.zeros((N_CONCEPTS, N_COLOR_BINS))
    for line in lines[4:]:
        if not line.strip():
            continue
        parts = line.split()
        histograms[CONCEPTS.index(parts[1])] = [float(v) for v in parts[2:]]
    return ConceptModel(histograms=histograms, background=background)


# Prototype colors (RGB) used to train the default concept model; chosen to
# land in well-separated HSV bins.
_PROTOTYPES = {
    "Pitch": (194, 178, 128),
    "Ground": (58, 157, 35),
    "Sky": (110, 180, 235),
    "PlayerCloseup": (224, 172, 105),
    "Scorecard": (245, 245, 245),
}


def prototype_color(concept: str) -> tuple[int, int, int]:
    return _PROTOTYPES[concept]


def default_concept_model() -> ConceptModel:
    """Concept model trained on small patches of the prototype colors."""
    examples = {
        concept: np.tile(np.array(color, dtype=np.uint8), (16, 16, 1))
        for concept, color in _PROTOTYPES.items()
    }
    return train_concept_model(examples)
