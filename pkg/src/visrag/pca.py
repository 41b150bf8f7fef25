"""2-D PCA projection of embeddings plus deterministic CSV/SVG emission.

Fit runs SVD on the centered data matrix (stable at wide dims with few
samples). Sign convention: within each component the entry of largest
magnitude is positive, so outputs reproduce across platforms. The SVG is
hand-rolled on a fixed 800x600 canvas with a fixed palette, with no
plotting library involved, so bytes are stable for golden tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InsufficientData, IoError

CANVAS_W = 800
CANVAS_H = 600
# tab10 hex values, assigned to sorted category names cyclically
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (dim,)
    components: np.ndarray  # (n_components, dim), row-orthonormal
    explained_variance: np.ndarray  # (n_components,), descending

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


def pca_fit(vectors, n_components: int = 2) -> PcaModel:
    """Fit on the centered data's top singular directions."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {x.shape}")
    n, dim = x.shape
    if n < 2:
        raise InsufficientData(f"need at least 2 vectors, got {n}")
    if n_components < 1 or n_components > min(n, dim):
        raise InsufficientData(
            f"cannot extract {n_components} components from {n}x{dim} data"
        )
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:n_components].copy()
    explained = (s[:n_components] ** 2) / (n - 1)
    for row in components:  # deterministic sign: largest-|entry| positive
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def pca_transform(model: PcaModel, vectors) -> np.ndarray:
    """Project vectors: (v - mean) @ components.T -> (n, n_components)."""
    x = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if x.shape[1] != model.dim:
        raise DimensionMismatch(f"vector dim {x.shape[1]} != model dim {model.dim}")
    return (x - model.mean) @ model.components.T


def _color_map(categories: Sequence[str]) -> dict:
    ordered = sorted(set(categories))
    return {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(ordered)}


def _scale(values, lo: float, hi: float):
    vmin = float(np.min(values))
    vmax = float(np.max(values))
    span = vmax - vmin
    if span <= 0.0:
        span = 1.0
        vmin -= 0.5
    return lambda v: lo + (v - vmin) / span * (hi - lo)


def scatter_emit(
    ids: Sequence[str],
    coords,
    categories: Sequence[str],
    splits: Sequence[str],
    out_csv,
    out_svg,
    title: Optional[str] = "Embedding map",
) -> None:
    """Write coords CSV (id,x,y,category,split) and an 800x600 SVG scatter,
    colors keyed by category, marker shape by split (store=circle,
    test=triangle). Byte-stable given identical inputs."""
    coords = np.asarray(coords, dtype=np.float64)
    n = coords.shape[0]
    if not (len(ids) == n == len(categories) == len(splits)):
        raise DimensionMismatch("ids, coords, categories, splits must align")

    lines = ["id,x,y,category,split"]
    for i in range(n):
        lines.append(
            f"{ids[i]},{coords[i, 0]:.6f},{coords[i, 1]:.6f},{categories[i]},{splits[i]}"
        )
    try:
        Path(out_csv).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    except OSError as exc:
        raise IoError(f"cannot write {out_csv}: {exc}") from exc

    colors = _color_map(categories)
    sx = _scale(coords[:, 0], 60.0, 620.0)
    sy = _scale(coords[:, 1], 560.0, 60.0)  # svg y grows downward

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" '
        f'height="{CANVAS_H}" viewBox="0 0 {CANVAS_W} {CANVAS_H}">',
        f'<rect x="0" y="0" width="{CANVAS_W}" height="{CANVAS_H}" fill="#ffffff"/>',
        '<rect x="50" y="50" width="580" height="520" fill="none" '
        'stroke="#cccccc" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="340" y="32" text-anchor="middle" font-family="sans-serif" '
            f'font-size="16">{title}</text>'
        )
    for i in range(n):
        x = sx(coords[i, 0])
        y = sy(coords[i, 1])
        color = colors[categories[i]]
        if splits[i] == "store":
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3.5" fill="{color}" fill-opacity="0.75"/>')
        else:
            parts.append(
                f'<path d="M {x:.2f} {y - 4.2:.2f} L {x - 3.8:.2f} {y + 3.0:.2f} '
                f'L {x + 3.8:.2f} {y + 3.0:.2f} Z" fill="{color}" fill-opacity="0.75"/>'
            )
    # legend: category swatches, then marker-shape key
    ly = 60
    parts.append(
        '<text x="650" y="52" font-family="sans-serif" font-size="13" '
        'font-weight="bold">Category</text>'
    )
    for c in sorted(colors):
        parts.append(f'<rect x="650" y="{ly}" width="10" height="10" fill="{colors[c]}"/>')
        parts.append(
            f'<text x="666" y="{ly + 9}" font-family="sans-serif" font-size="12">{c}</text>'
        )
        ly += 18
    ly += 10
    parts.append(
        f'<text x="650" y="{ly}" font-family="sans-serif" font-size="13" '
        f'font-weight="bold">Split</text>'
    )
    ly += 14
    parts.append(f'<circle cx="655" cy="{ly}" r="3.5" fill="#555555"/>')
    parts.append(
        f'<text x="666" y="{ly + 4}" font-family="sans-serif" font-size="12">store</text>'
    )
    ly += 18
    parts.append(
        f'<path d="M 655 {ly - 4} L 651.2 {ly + 3} L 658.8 {ly + 3} Z" fill="#555555"/>'
    )
    parts.append(
        f'<text x="666" y="{ly + 4}" font-family="sans-serif" font-size="12">test</text>'
    )
    parts.append("</svg>")
    try:
        Path(out_svg).write_bytes(("\n".join(parts) + "\n").encode("utf-8"))
    except OSError as exc:
        raise IoError(f"cannot write {out_svg}: {exc}") from exc
