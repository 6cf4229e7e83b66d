"""Seeded generators for the benchmark geometries plus the noise model.

Every generator is a pure function of (seed, parameters) and emits a
PointSet with ground-truth labels. Grid-based plateaus get a small
uniform jitter by default so k-distances are not exactly tied; pass
jitter=0 for the exact-grid degenerate cases. Each dataset targets
desk scale (roughly 1-5k points).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import PointSet

# Fig-8-style benchmark roster, in report order.
SUITE_NAMES = ("TC", "TL", "TG", "SQ", "MR", "IG", "CG", "SDD")


@dataclass(frozen=True)
class GenSpec:
    """Named dataset request: generator name, seed, parameter overrides."""

    name: str
    seed: int = 0
    params: dict = field(default_factory=dict)


def generate(spec: GenSpec) -> PointSet:
    return gen_suite(spec.name, spec.seed, **spec.params)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _grid_centers(
    x0: float, y0: float, nx: int, ny: int, spacing: float
) -> np.ndarray:
    xs = x0 + (np.arange(nx) + 0.5) * spacing
    ys = y0 + (np.arange(ny) + 0.5) * spacing
    return np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)


def _apply_jitter(
    rng: np.random.Generator, pts: np.ndarray, spacing: float, jitter: float
) -> np.ndarray:
    if jitter > 0.0:
        pts = pts + rng.uniform(-jitter * spacing, jitter * spacing, pts.shape)
    return pts


def _jittered_grid(
    rng: np.random.Generator,
    x0: float,
    y0: float,
    nx: int,
    ny: int,
    spacing: float,
    jitter: float,
) -> np.ndarray:
    """nx x ny cell-centered lattice with uniform jitter <= jitter*spacing."""
    return _apply_jitter(rng, _grid_centers(x0, y0, nx, ny, spacing), spacing, jitter)


def _sym_positions(extent: float, spacing: float) -> np.ndarray:
    """Center-symmetric lattice positions +-(m + 0.5)*spacing within extent."""
    m = int(np.floor(extent / spacing - 0.5)) + 1
    half = (np.arange(m) + 0.5) * spacing
    return np.concatenate([-half[::-1], half])


def _square_annulus(
    rng: np.random.Generator,
    inner_edge: float,
    rings: int,
    spacing: float,
    jitter: float,
    pad: float,
) -> tuple[np.ndarray, float]:
    """Square frame of `rings` lattice rings around an inner region.

    Four rectangular grid blocks (top, bottom, left, right). Every
    interface, including to the enclosed region, is a pad*spacing gap
    between equal-density grids, so no seam is denser than the grids it
    joins. Returns the points and the outermost coordinate (for
    nesting).
    """
    first = inner_edge + pad * spacing
    ring_pos = first + spacing * np.arange(rings)
    last = ring_pos[-1]
    xs_full = _sym_positions(last + spacing / 2.0, spacing)
    # side rows descend from one spacing below the top strip, mirrored;
    # this keeps the corner joints at exactly one spacing
    down = first - spacing * np.arange(1, int(first / spacing) + 1)
    down = down[down > 0.35 * spacing]
    ys_side = np.concatenate([-down[::-1], down]) if down.size else np.zeros(1)

    blocks = []
    for sign in (1.0, -1.0):
        rows = sign * ring_pos
        # top/bottom: full-width rows
        gx, gy = np.meshgrid(xs_full, rows, indexing="ij")
        blocks.append(np.column_stack([gx.ravel(), gy.ravel()]))
        # left/right: columns spanning the inner height
        gx, gy = np.meshgrid(rows, ys_side, indexing="ij")
        blocks.append(np.column_stack([gx.ravel(), gy.ravel()]))
    pts = np.concatenate(blocks)
    outer = max(float(xs_full.max()), float(last))
    return _apply_jitter(rng, pts, spacing, jitter), outer


def gen_triple_square(
    seed: int = 0,
    inner_cells: int = 12,
    spacing: float = 1.0,
    ratios: tuple[float, float, float] = (1.0, 2.0, 4.0),
    rings: tuple[int, int] = (4, 3),
    jitter: float = 0.07,
    boundary_pad: float = 1.0,
) -> PointSet:
    """Three nested square regions whose lattice spacing grows outward.

    The inner square has the highest density; the regions touch (the
    inter-region padding stays below 1.5 local spacings, so no
    low-density gap opens). Labels 0/1/2 from inner to outer.
    """
    rng = _rng(seed)
    s0, s1, s2 = (spacing * r for r in ratios)
    half = inner_cells * s0 / 2.0
    inner = _jittered_grid(rng, -half, -half, inner_cells, inner_cells, s0, jitter)
    mid, mid_edge = _square_annulus(
        rng, half - s0 / 2.0, rings[0], s1, jitter, boundary_pad
    )
    outer, _ = _square_annulus(rng, mid_edge, rings[1], s2, jitter, boundary_pad)
    coords = np.concatenate([inner, mid, outer])
    labels = np.concatenate(
        [np.full(len(inner), 0), np.full(len(mid), 1), np.full(len(outer), 2)]
    )
    return PointSet(coords, labels)


def gen_mountain_river(
    seed: int = 0,
    mountain_cells_x: int = 10,
    river_cells_x: int = 4,
    cells_y: int = 26,
    spacing: float = 1.0,
    river_ratio: float = 2.2,
    jitter: float = 0.07,
    boundary_pad: float = 1.0,
) -> PointSet:
    """Two dense blocks flanking one sparse central band, all contiguous.

    Three labels (left mountain, river, right mountain); with
    river_cells_x = 0 the band disappears and two labels remain.
    """
    rng = _rng(seed)
    height = cells_y * spacing
    s_r = spacing * river_ratio
    m_edge = mountain_cells_x * spacing - spacing / 2.0  # last mountain column

    blocks: list[np.ndarray] = []
    left = _jittered_grid(rng, 0.0, 0.0, mountain_cells_x, cells_y, spacing, jitter)
    blocks.append(left)
    if river_cells_x > 0:
        river_x0 = m_edge + boundary_pad * s_r - s_r / 2.0
        river = _jittered_grid(
            rng, river_x0, 0.0, river_cells_x, int(round(height / s_r)), s_r, jitter
        )
        blocks.append(river)
        right_edge = river_x0 + river_cells_x * s_r - s_r / 2.0  # last river column
        right_x0 = right_edge + boundary_pad * s_r - spacing / 2.0
    else:
        right_x0 = m_edge + boundary_pad * spacing - spacing / 2.0
    right = _jittered_grid(rng, right_x0, 0.0, mountain_cells_x, cells_y, spacing, jitter)
    blocks.append(right)
    labels = [np.full(len(b), i) for i, b in enumerate(blocks)]
    return PointSet(np.concatenate(blocks), np.concatenate(labels))


def gen_gradient_square(
    seed: int = 0,
    cells: int = 28,
    density_ratio: float = 20.0,
    base_spacing: float = 1.0,
    jitter: float = 0.07,
) -> PointSet:
    """One square whose spacing follows a geometric progression per axis.

    The density changes smoothly along the diagonal with the requested
    corner-to-corner ratio; a single label.
    """
    rng = _rng(seed)
    growth = float(density_ratio) ** (1.0 / (2.0 * (cells - 1)))
    widths = base_spacing * growth ** np.arange(cells)
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    centers = edges[:-1] + widths / 2.0
    pts = np.stack(np.meshgrid(centers, centers, indexing="ij"), axis=-1).reshape(-1, 2)
    local = np.stack(np.meshgrid(widths, widths, indexing="ij"), axis=-1).reshape(-1, 2)
    if jitter > 0.0:
        pts = pts + rng.uniform(-jitter, jitter, pts.shape) * local
    return PointSet(pts, np.zeros(len(pts), dtype=np.int64))


def _stratified(rng: np.random.Generator, n: int, jitter: float) -> np.ndarray:
    """n stratified samples of [0, 1): one jittered point per stratum.

    Keeps gaps bounded (no Poisson voids), which is what densely sampled
    manifold data looks like in practice.
    """
    return (np.arange(n) + 0.5 + rng.uniform(-jitter, jitter, n)) / n


def gen_two_cycles(
    seed: int = 0,
    n_inner: int = 400,
    n_outer: int = 800,
    r_inner: float = 1.0,
    r_outer: float = 2.2,
    band: float = 0.0,
    jitter: float = 0.08,
) -> PointSet:
    """Two concentric circles sampled at stratified-random angles.

    The optional radial band is bounded (uniform), so every inner point
    stays strictly closer to the origin than every outer point.
    """
    rng = _rng(seed)
    pts = []
    for n, r in ((n_inner, r_inner), (n_outer, r_outer)):
        theta = 2.0 * np.pi * (_stratified(rng, n, jitter) + rng.uniform())
        rad = r + (rng.uniform(-band / 2.0, band / 2.0, n) if band > 0.0 else 0.0)
        pts.append(np.column_stack([rad * np.cos(theta), rad * np.sin(theta)]))
    labels = np.concatenate([np.zeros(n_inner, int), np.ones(n_outer, int)])
    return PointSet(np.concatenate(pts), labels)


def gen_three_lines(
    seed: int = 0,
    n_per_line: int = 300,
    length: float = 10.0,
    separation: float = 1.8,
    width: float = 0.0,
    jitter: float = 0.05,
) -> PointSet:
    """Three parallel diagonal segments sampled stratified along their length."""
    rng = _rng(seed)
    direction = np.array([1.0, 1.0]) / np.sqrt(2.0)
    normal = np.array([-1.0, 1.0]) / np.sqrt(2.0)
    pts = []
    for j in range(3):
        t = length * _stratified(rng, n_per_line, jitter)
        base = normal * (j * separation)
        seg = base + t[:, None] * direction
        if width > 0.0:
            seg = seg + rng.uniform(-width / 2.0, width / 2.0, n_per_line)[:, None] * normal
        pts.append(seg)
    labels = np.repeat(np.arange(3), n_per_line)
    return PointSet(np.concatenate(pts), labels)


def gen_gauss_pair(
    seed: int = 0,
    n_per: int = 400,
    sigma: float = 1.0,
    center_distance: float = 6.0,
) -> PointSet:
    """Two equal Gaussian blobs placed close to each other."""
    rng = _rng(seed)
    a = rng.normal(0.0, sigma, (n_per, 2))
    b = rng.normal(0.0, sigma, (n_per, 2)) + np.array([center_distance, 0.0])
    labels = np.concatenate([np.zeros(n_per, int), np.ones(n_per, int)])
    return PointSet(np.concatenate([a, b]), labels)


def _truncated_gauss(
    rng: np.random.Generator, n: int, sigma: float, trunc: float
) -> np.ndarray:
    """n 2-D Gaussian samples, resampled while beyond trunc*sigma."""
    pts = rng.normal(0.0, sigma, (n, 2))
    limit = trunc * sigma
    while True:
        bad = np.flatnonzero(np.einsum("ij,ij->i", pts, pts) > limit * limit)
        if bad.size == 0:
            return pts
        pts[bad] = rng.normal(0.0, sigma, (bad.size, 2))


def gen_three_gauss(
    seed: int = 0,
    sizes: tuple[int, int, int] = (500, 25, 15),
    sigmas: tuple[float, float, float] = (1.0, 0.22, 0.18),
    centers: tuple[tuple[float, float], ...] = ((0.0, 0.0), (5.5, 5.5), (-5.5, 5.5)),
    trunc: float = 3.2,
) -> PointSet:
    """One large Gaussian cluster and two far smaller ones in the corners.

    Samples are truncated at trunc standard deviations so extreme tail
    clumps do not masquerade as additional clusters.
    """
    rng = _rng(seed)
    pts = []
    labels = []
    for i, (n, s, c) in enumerate(zip(sizes, sigmas, centers)):
        pts.append(_truncated_gauss(rng, n, s, trunc) + np.asarray(c))
        labels.append(np.full(n, i))
    return PointSet(np.concatenate(pts), np.concatenate(labels))


def gen_tg(
    seed: int = 0,
    n_gauss: int = 350,
    gauss_sigma: float = 5.0,
    gauss_distance: float = 3.2,
    gauss_gap: float = 1.5,
    ts_inner_cells: int = 16,
    ts_rings: tuple[int, int] = (5, 4),
) -> PointSet:
    """Two close Gaussians plus a contiguous triple-density block.

    Five labels: the two Gaussian clusters (top-left, close enough to be
    genuinely hard to separate) and the three nested plateaus
    (bottom-right).
    """
    rng = _rng(seed)
    ts = gen_triple_square(
        seed=int(rng.integers(2**32)), inner_cells=ts_inner_cells, rings=ts_rings
    )
    top = ts.coords[:, 1].max()
    left = ts.coords[:, 0].min()
    c1 = np.array(
        [left + 0.2 * np.ptp(ts.coords[:, 0]), top + (gauss_gap + 3.0) * gauss_sigma]
    )
    c2 = c1 + np.array([gauss_distance * gauss_sigma, 0.0])
    g1 = _truncated_gauss(rng, n_gauss, gauss_sigma, 3.0) + c1
    g2 = _truncated_gauss(rng, n_gauss, gauss_sigma, 3.0) + c2
    coords = np.concatenate([g1, g2, ts.coords])
    labels = np.concatenate(
        [np.zeros(n_gauss, int), np.ones(n_gauss, int), ts.labels + 2]
    )
    return PointSet(coords, labels)


def gen_sdd(
    seed: int = 0,
    gap_scale: float = 1.0,
    ts_spacing: float = 1.0,
    mr_spacing: float = 1.5,
    sq_spacing: float = 0.3,
    sq_density_ratio: float = 10.0,
    sq_cells: int = 24,
    jitter: float = 0.07,
) -> PointSet:
    """Seven-cluster composite at mixed granularities, placed close together.

    Triple-square (3 labels), gradient square (1 label), and
    mountain-river (3 labels) side by side, the gradient square's
    extreme-density corner pointing into the scene. Facing spacings
    differ by at least 2x everywhere, so the structure boundaries stay
    detectable even though no low-density void separates the regions.
    gap_scale sets the inter-region margin in units of the coarser
    facing spacing (1 tiles them flush, like the interior grids).
    """
    rng = _rng(seed)
    ts = gen_triple_square(
        seed=int(rng.integers(2**32)), inner_cells=12, spacing=ts_spacing, jitter=jitter
    )
    sq = gen_gradient_square(
        seed=int(rng.integers(2**32)),
        cells=sq_cells,
        density_ratio=sq_density_ratio,
        base_spacing=sq_spacing,
        jitter=jitter,
    )
    # flip so the extreme-density corner points into the scene (top-right)
    sq_flipped = sq.coords.max(axis=0) - sq.coords

    mr = gen_mountain_river(
        seed=int(rng.integers(2**32)),
        mountain_cells_x=8,
        river_cells_x=4,
        cells_y=26,
        spacing=mr_spacing,
        jitter=jitter,
    )

    def _place(coords: np.ndarray, x: float, y: float) -> np.ndarray:
        return coords - coords.min(axis=0) + np.array([x, y])

    ts_w = np.ptp(ts.coords[:, 0])
    ts_h = np.ptp(ts.coords[:, 1])
    mr_h = np.ptp(mr.coords[:, 1])
    sq_h = np.ptp(sq_flipped[:, 1])

    # the scene stays near-square so the Max-Min rescale is near-isotropic
    gap_ts_mr = gap_scale * 4.0 * ts_spacing
    gap_ts_sq = gap_scale * 4.0 * ts_spacing

    ts_c = _place(ts.coords, 0.0, sq_h + gap_ts_sq)
    mr_c = _place(mr.coords, ts_w + gap_ts_mr, sq_h + gap_ts_sq + (ts_h - mr_h) / 2.0)
    sq_c = _place(sq_flipped, 0.3 * ts_w, 0.0)

    coords = np.concatenate([ts_c, mr_c, sq_c])
    labels = np.concatenate([ts.labels, mr.labels + 3, sq.labels + 6])
    return PointSet(coords, labels)


def _color_card_grays(kind: str, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-column gray level and band label for one card kind."""
    x = np.arange(width)
    if kind == "3":
        bounds = np.array([0, width // 3, 2 * width // 3, width])
        gray = np.empty(width)
        label = np.empty(width, dtype=np.int64)
        gray[: bounds[1]] = 0.0
        ramp = np.linspace(0.0, 1.0, bounds[2] - bounds[1])
        gray[bounds[1] : bounds[2]] = ramp
        gray[bounds[2] :] = 1.0
        label[: bounds[1]] = 0
        label[bounds[1] : bounds[2]] = 1
        label[bounds[2] :] = 2
        return gray, label
    if kind == "6a":
        levels = np.array([0.0, 0.44, 0.50, 0.56, 0.62, 1.0])
        band = np.minimum(x * 6 // width, 5)
        return levels[band], band.astype(np.int64)
    if kind == "6b":
        band = np.minimum(x * 6 // width, 5)
        gray = np.empty(width)
        for b in range(6):
            cols = np.flatnonzero(band == b)
            if b == 0:
                gray[cols] = 0.0
            elif b == 1:
                gray[cols] = np.linspace(0.0, 0.40, len(cols))
            else:
                gray[cols] = (0.55, 0.61, 0.80, 0.86)[b - 2]
        return gray, band.astype(np.int64)
    raise ValueError(f"unknown color card kind {kind!r}")


def gen_color_card(kind: str = "3", width: int = 90, height: int = 30) -> PointSet:
    """Grayscale color-card pixel field as (x, y, gray) points.

    Each component is divided by its maximum, so all features lie in
    [0, 1]. Labels mark the constructed bands.
    """
    gray_col, label_col = _color_card_grays(kind, width)
    xs, ys = np.meshgrid(np.arange(width), np.arange(height), indexing="ij")
    coords = np.column_stack(
        [
            xs.ravel() / max(width - 1, 1),
            ys.ravel() / max(height - 1, 1),
            np.repeat(gray_col / max(gray_col.max(), 1e-12), height),
        ]
    )
    labels = np.repeat(label_col, height)
    return PointSet(coords, labels)


def gen_suite(name: str, seed: int = 0, **params) -> PointSet:
    """Generate a roster dataset by name (see SUITE_NAMES plus aliases)."""
    dispatch = {
        "TC": gen_two_cycles,
        "TL": gen_three_lines,
        "TG": gen_tg,
        "SQ": gen_gradient_square,
        "MR": gen_mountain_river,
        "IG": lambda seed=0, **kw: gen_three_gauss(
            seed=seed, **{"sizes": (500, 30, 20), **kw}
        ),
        "CG": gen_gauss_pair,
        "SDD": gen_sdd,
        "TRIPLE_SQUARE": gen_triple_square,
        "MOUNTAIN_RIVER": gen_mountain_river,
        "GRADIENT_SQUARE": gen_gradient_square,
        "THREE_GAUSS": gen_three_gauss,
        "COLOR_CARD_3": lambda seed=0, **kw: gen_color_card("3", **kw),
        "COLOR_CARD_6A": lambda seed=0, **kw: gen_color_card("6a", **kw),
        "COLOR_CARD_6B": lambda seed=0, **kw: gen_color_card("6b", **kw),
    }
    key = name.upper()
    if key not in dispatch:
        raise ValueError(f"unknown dataset name {name!r}; known: {sorted(dispatch)}")
    return dispatch[key](seed=seed, **params)


def add_noise(ps: PointSet, x: float, seed: int = 0) -> PointSet:
    """Perturb coordinates with Gaussian noise of std x * d.

    d is the largest axis range of the input; x = 0 returns the input
    unchanged. Labels are preserved and the result is deterministic in
    the seed.
    """
    if x < 0.0:
        raise ValueError("noise level must be >= 0")
    if x == 0.0:
        return ps
    d = float((ps.coords.max(axis=0) - ps.coords.min(axis=0)).max())
    rng = _rng(seed)
    return PointSet(ps.coords + rng.normal(0.0, x * d, ps.coords.shape), ps.labels)
