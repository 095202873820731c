"""Seeded synthetic slice generator: paired basal/contrast ROIs with
exact ground-truth lumen and plaque masks.

Phantoms stand in for clinical data in tests and regression suites, so
generation is a pure function of the parameters and is reproducible
across implementations. The reference pseudo-random generator is
SplitMix64:

    state_i = seed + (i + 1) * 0x9E3779B97F4A7C15        (mod 2**64)
    z = state_i
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9             (mod 2**64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB             (mod 2**64)
    out_i = z ^ (z >> 31)

Uniform doubles are ((out_i >> 11) + 1) * 2**-53, in (0, 1]. Gaussian
draws come from Box-Muller pairs: with consecutive uniforms (u1, u2),
z0 = sqrt(-2 ln u1) cos(2 pi u2) and z1 = sqrt(-2 ln u1) sin(2 pi u2).
A phantom consumes its stream in a fixed order: calcium placement draws
first, then one gaussian per pixel in row-major order for the shared
noise field.

Geometry: a circular vessel wall ring around an interior that models
thrombus, with an elliptical patent lumen inside. The basal and contrast
images are identical (including the noise field) except for the lumen
intensity. Calcium specks are disks placed against the lumen boundary,
inside the vessel and never overlapping the lumen.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imgproc import Ellipse
from .model import BinaryMask, GrayImage, save_image

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

WALL_RING = 2.0  # vessel wall thickness, base-resolution pixels


def _splitmix(states: np.ndarray) -> np.ndarray:
    z = states
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class PhantomRng:
    """Counter-based SplitMix64 stream (see module docstring)."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    def uniforms(self, n: int) -> np.ndarray:
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            out = _splitmix(self._seed + idx * _GAMMA)
        return ((out >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def raw(self) -> int:
        """Next raw 64-bit output (used to derive child seeds)."""
        self._count += 1
        with np.errstate(over="ignore"):
            out = _splitmix(self._seed + np.uint64(self._count) * _GAMMA)
        return int(out)

    def gaussians(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(2.0 * math.pi * u2)
        z[1::2] = r * np.sin(2.0 * math.pi * u2)
        return z[:n]


@dataclass(frozen=True)
class PhantomParams:
    """Geometry, intensities, and noise level of one synthetic slice."""

    seed: int
    size: int = 96
    vessel_radius: float = 30.0
    lumen_semi_axes: tuple[float, float] = (18.0, 15.0)
    lumen_offset: tuple[float, float] = (3.0, -2.0)
    lumen_angle: float = 0.0
    background: float = 25.0
    vessel_wall: float = 90.0
    thrombus: float = 70.0
    lumen_basal: float = 110.0
    lumen_cm: float = 220.0
    calcium: float = 245.0
    n_calcium: int = 0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.size < 8:
            raise ValueError("phantom size must be at least 8 pixels")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.n_calcium < 0:
            raise ValueError("n_calcium must be non-negative")
        for name in ("background", "vessel_wall", "thrombus", "lumen_basal", "lumen_cm", "calcium"):
            v = getattr(self, name)
            if not (0.0 <= v <= 255.0):
                raise ValueError(f"intensity {name}={v} outside [0, 255]")
        a, b = self.lumen_semi_axes
        ox, oy = self.lumen_offset
        if math.hypot(ox, oy) + max(a, b) > self.vessel_radius - WALL_RING:
            raise ValueError("lumen does not fit inside the vessel interior")

    @property
    def center(self) -> tuple[float, float]:
        return (self.size / 2.0, self.size / 2.0)

    @property
    def lumen_ellipse(self) -> Ellipse:
        cx, cy = self.center
        return Ellipse(
            cx + self.lumen_offset[0],
            cy + self.lumen_offset[1],
            self.lumen_semi_axes[0],
            self.lumen_semi_axes[1],
            self.lumen_angle,
        )

    @property
    def selection_ellipse(self) -> Ellipse:
        """Operator-style elliptical selection drawn around the vessel."""
        cx, cy = self.center
        r = self.vessel_radius + 4.0
        return Ellipse(cx, cy, r, r, 0.0)


@dataclass(frozen=True)
class PhantomSlice:
    basal: GrayImage
    cm: GrayImage
    ellipse: Ellipse
    truth_lumen: BinaryMask
    truth_plaque: BinaryMask
    params: PhantomParams
    specks: tuple[tuple[float, float, float], ...] = field(default=())


def _pixel_grid(size: int, scale: int) -> tuple[np.ndarray, np.ndarray]:
    coords = (np.arange(size * scale, dtype=np.float64) + 0.5) / scale
    return np.meshgrid(coords, coords)  # (x, y), each (h, w)


def _disk(px, py, cx, cy, r) -> np.ndarray:
    return (px - cx) ** 2 + (py - cy) ** 2 <= r * r


def _ellipse_bits(px, py, ell: Ellipse) -> np.ndarray:
    dx, dy = px - ell.cx, py - ell.cy
    ca, sa = math.cos(ell.angle), math.sin(ell.angle)
    u = dx * ca + dy * sa
    v = -dx * sa + dy * ca
    return (u / max(ell.a, 1e-12)) ** 2 + (v / max(ell.b, 1e-12)) ** 2 <= 1.0


def _lumen_edge_radius(ell: Ellipse, theta: float) -> float:
    """Support radius of the lumen boundary along direction theta."""
    psi = theta - ell.angle
    return 1.0 / math.sqrt(
        (math.cos(psi) / max(ell.a, 1e-12)) ** 2 + (math.sin(psi) / max(ell.b, 1e-12)) ** 2
    )


def _place_specks(params: PhantomParams, rng: PhantomRng) -> list[tuple[float, float, float]]:
    """Deterministic calcium placement: disks hugging the lumen boundary,
    inside the vessel, pairwise separated, never overlapping the lumen."""
    ell = params.lumen_ellipse
    vcx, vcy = params.center
    specks: list[tuple[float, float, float]] = []
    attempts = 0
    while len(specks) < params.n_calcium:
        attempts += 1
        if attempts > 300:
            raise ValueError(
                f"cannot place {params.n_calcium} calcium specks in the available annulus"
            )
        theta = 2.0 * math.pi * rng.uniform()
        want_r = 1.2 + 1.2 * rng.uniform()
        edge = _lumen_edge_radius(ell, theta)
        placed = None
        r_speck = want_r
        for _ in range(6):
            d = edge + r_speck + 0.7
            sx = ell.cx + d * math.cos(theta)
            sy = ell.cy + d * math.sin(theta)
            if math.hypot(sx - vcx, sy - vcy) + r_speck <= params.vessel_radius - 0.3:
                placed = (sx, sy, r_speck)
                break
            r_speck *= 0.8
            if r_speck < 0.8:
                break
        if placed is None:
            continue
        if any(
            math.hypot(placed[0] - ox, placed[1] - oy) < placed[2] + orr + 2.0
            for ox, oy, orr in specks
        ):
            continue
        specks.append(placed)
    return specks


def _truth_masks(
    params: PhantomParams, specks: list[tuple[float, float, float]], scale: int
) -> tuple[BinaryMask, BinaryMask]:
    px, py = _pixel_grid(params.size, scale)
    lumen = _ellipse_bits(px, py, params.lumen_ellipse)
    plaque = np.zeros_like(lumen)
    for sx, sy, sr in specks:
        plaque |= _disk(px, py, sx, sy, sr)
    plaque &= ~lumen  # placement already avoids the lumen; make it exact
    return BinaryMask(lumen), BinaryMask(plaque)


def generate(params: PhantomParams, truth_scale: int = 1) -> PhantomSlice:
    """Generate one phantom slice; pure function of the parameters.

    ``truth_scale`` rasterizes the ground-truth masks on a grid that many
    times denser than the images (use 2 to compare against pipeline
    outputs at the default rescaling factor).
    """
    if truth_scale < 1:
        raise ValueError("truth_scale must be >= 1")
    rng = PhantomRng(params.seed)
    specks = _place_specks(params, rng)

    px, py = _pixel_grid(params.size, 1)
    vcx, vcy = params.center
    vessel = _disk(px, py, vcx, vcy, params.vessel_radius)
    interior = _disk(px, py, vcx, vcy, params.vessel_radius - WALL_RING)
    lumen = _ellipse_bits(px, py, params.lumen_ellipse)

    base = np.full((params.size, params.size), params.background)
    base[vessel & ~interior] = params.vessel_wall
    base[interior & ~lumen] = params.thrombus
    basal = base.copy()
    cm = base.copy()
    basal[lumen] = params.lumen_basal
    cm[lumen] = params.lumen_cm
    for sx, sy, sr in specks:
        speck = _disk(px, py, sx, sy, sr) & ~lumen
        basal[speck] = params.calcium
        cm[speck] = params.calcium
    if params.noise_sigma > 0:
        noise = params.noise_sigma * rng.gaussians(params.size * params.size).reshape(
            params.size, params.size
        )
        basal = basal + noise
        cm = cm + noise
    basal = np.clip(basal, 0.0, 255.0)
    cm = np.clip(cm, 0.0, 255.0)

    truth_lumen, truth_plaque = _truth_masks(params, specks, truth_scale)
    return PhantomSlice(
        basal=GrayImage(basal),
        cm=GrayImage(cm),
        ellipse=params.selection_ellipse,
        truth_lumen=truth_lumen,
        truth_plaque=truth_plaque,
        params=params,
        specks=tuple(specks),
    )


def suite_params(
    base_seed: int, count: int, noise_sigma: float = 3.0, size: int = 96
) -> list[PhantomParams]:
    """Deterministic morphology schedule for a phantom suite.

    Case i of n: patent-lumen fraction sweeps 0.2 -> 0.9 linearly (0.55
    for a singleton suite); thrombus contrast alternates on/off (off
    renders the interior at the wall intensity); calcium speck count
    cycles 0..3 but drops to 0 when the fraction exceeds 0.8 (no annulus
    room). Per-case seeds and the remaining shape draws come from the
    SplitMix64 stream of ``base_seed``.
    """
    rng = PhantomRng(base_seed)
    out = []
    for i in range(count):
        fraction = 0.55 if count == 1 else 0.2 + 0.7 * i / (count - 1)
        seed_i = rng.raw()
        ratio = 0.75 + 0.25 * rng.uniform()
        angle = math.pi * rng.uniform()
        u_off_angle = rng.uniform()
        u_off_mag = rng.uniform()
        vessel_radius = 30.0
        r_int = vessel_radius - WALL_RING
        a = min(r_int * math.sqrt(fraction / ratio), r_int - 0.5)
        b = fraction * r_int * r_int / a
        room = max(0.0, r_int - max(a, b) - 1.0)
        off_mag = u_off_mag * room
        off_angle = 2.0 * math.pi * u_off_angle
        thrombus_on = i % 2 == 0
        params = PhantomParams(
            seed=seed_i,
            size=size,
            vessel_radius=vessel_radius,
            lumen_semi_axes=(a, b),
            lumen_offset=(off_mag * math.cos(off_angle), off_mag * math.sin(off_angle)),
            lumen_angle=angle,
            thrombus=70.0 if thrombus_on else 90.0,
            n_calcium=(i % 4) if fraction <= 0.8 else 0,
            noise_sigma=noise_sigma,
        )
        out.append(params)
    return out


def generate_suite(
    base_seed: int, count: int, noise_sigma: float = 3.0, truth_scale: int = 1, size: int = 96
) -> list[PhantomSlice]:
    """Generate the seeded suite described by ``suite_params``."""
    return [generate(p, truth_scale=truth_scale) for p in suite_params(base_seed, count, noise_sigma, size)]


def write_series(
    out_dir,
    slices: list[PhantomSlice],
    patient: str = "phantom01",
    truth_scale: int = 2,
) -> Path:
    """Write a ready-to-process series directory plus ground-truth masks.

    Layout: ``<out>/<patient>/basal/<id>.png``, ``.../cm/<id>.png``,
    ``.../rois.csv`` and ``.../truth/<id>_lumen.png`` / ``<id>_plaque.png``
    (truth rasterized at ``truth_scale`` to match pipeline outputs).
    """
    root = Path(out_dir) / patient
    (root / "basal").mkdir(parents=True, exist_ok=True)
    (root / "cm").mkdir(parents=True, exist_ok=True)
    (root / "truth").mkdir(parents=True, exist_ok=True)
    with open(root / "rois.csv", "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", "cx", "cy", "a", "b", "angle"])
        for i, sl in enumerate(slices):
            slice_id = f"{i:03d}"
            save_image(sl.basal, root / "basal" / f"{slice_id}.png")
            save_image(sl.cm, root / "cm" / f"{slice_id}.png")
            if truth_scale == 1:
                lumen, plaque = sl.truth_lumen, sl.truth_plaque
            else:
                lumen, plaque = _truth_masks(sl.params, list(sl.specks), truth_scale)
            save_image(lumen, root / "truth" / f"{slice_id}_lumen.png")
            save_image(plaque, root / "truth" / f"{slice_id}_plaque.png")
            e = sl.ellipse
            out.writerow([slice_id, repr(e.cx), repr(e.cy), repr(e.a), repr(e.b), repr(e.angle)])
    return root
