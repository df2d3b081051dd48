"""
Fit configuration, depth dependent thresholds and the shipped presets.

Configurations are stored as flat ``key = value`` text files::

    degrees = 2,2
    max_iterations = 7
    threshold = 0.5
    min_element_size = 2,2
"""

from dataclasses import dataclass, field, fields, replace

import numpy as np


@dataclass(frozen=True)
class DepthThreshold:
    """
    Piecewise-linear tolerance as a function of elevation.

    Parameters
    ----------
    depths : sequence of float
        Strictly increasing breakpoints.  With ``relative=True`` they are
        fractions of the data elevation range (0 at the deepest point, 1 at
        the shallowest).
    tols : sequence of float
        Tolerance at each breakpoint, all positive.
    relative : bool
    """

    depths: tuple
    tols: tuple
    relative: bool = False

    def __post_init__(self):
        d = tuple(float(x) for x in np.atleast_1d(self.depths))
        t = tuple(float(x) for x in np.atleast_1d(self.tols))
        if len(d) != len(t) or not d:
            raise ValueError("depths and tols must have the same non-zero length")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(not x > 0 for x in t):
            raise ValueError("tolerances must be positive")
        if any(b > a for a, b in zip(t, t[1:])):
            raise ValueError("tolerance must not grow toward shallower water")
        object.__setattr__(self, "depths", d)
        object.__setattr__(self, "tols", t)

    @classmethod
    def constant(cls, eps):
        return cls((0.0,), (float(eps),))

    @classmethod
    def linear_range(cls, deep, shallow):
        """Tolerance ``deep`` at the deepest data point, ``shallow`` at the shallowest."""
        return cls((0.0, 1.0), (deep, shallow), relative=True)

    @property
    def min(self):
        return min(self.tols)

    @property
    def max(self):
        return max(self.tols)

    def __call__(self, z, zrange=None):
        z = np.asarray(z, dtype=float)
        if self.relative:
            if zrange is None:
                raise ValueError("relative threshold needs the data elevation range")
            lo, hi = zrange
            z = (z - lo) / (hi - lo) if hi > lo else np.ones_like(z)
        if len(self.depths) == 1:
            return np.full(z.shape, self.tols[0]) if z.ndim else self.tols[0]
        out = np.interp(z, self.depths, self.tols)
        return out if z.ndim else float(out)

    def to_text(self):
        pairs = ", ".join(f"{d!r}:{t!r}" for d, t in zip(self.depths, self.tols))
        return ("relative " if self.relative else "") + pairs

    @classmethod
    def from_text(cls, s):
        s = s.strip()
        relative = s.startswith("relative")
        if relative:
            s = s[len("relative"):]
        d, t = [], []
        for item in s.split(","):
            a, b = item.split(":")
            d.append(float(a))
            t.append(float(b))
        return cls(tuple(d), tuple(t), relative)


def depth_threshold(z, spec, zrange=None):
    """Tolerance for elevation(s) ``z``; ``spec`` is a number or a :class:`DepthThreshold`."""
    if isinstance(spec, DepthThreshold):
        return spec(z, zrange)
    eps = float(spec)
    if not eps > 0:
        raise ValueError("threshold must be positive")
    return np.full(np.shape(z), eps) if np.ndim(z) else eps


@dataclass(frozen=True)
class FitConfig:
    """
    Parameters of the adaptive fit.

    ``alpha1`` weights the smoothness term and ``1 - alpha1`` the data term.
    ``initial_grid`` is the number of coefficients of the initial
    tensor-product surface in each direction.
    """

    degrees: tuple = (2, 2)
    max_iterations: int = 7
    threshold: object = 0.5
    initial_grid: tuple = (8, 8)
    alpha1: float = 1e-9
    w2: float = 0.5
    w3: float = 0.5
    ls_iterations: int = 3
    mba_passes: int = 2
    min_element_size: tuple = None
    significant_weight: float = 5.0
    significant_final_weight: float = 50.0
    significant_tol: float = None
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        object.__setattr__(self, "initial_grid", tuple(int(n) for n in self.initial_grid))
        if len(self.degrees) != 2 or min(self.degrees) < 1:
            raise ValueError("degrees must be two integers >= 1")
        if len(self.initial_grid) != 2 or any(n < d + 1 for n, d in zip(self.initial_grid, self.degrees)):
            raise ValueError("initial_grid needs at least degree + 1 coefficients per direction")
        if not 0 < self.alpha1 < 1:
            raise ValueError("alpha1 must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.ls_iterations < 0 or self.mba_passes < 1:
            raise ValueError("ls_iterations must be >= 0 and mba_passes >= 1")
        if self.w2 < 0 or self.w3 < 0:
            raise ValueError("smoothness weights must be non-negative")
        if not isinstance(self.threshold, DepthThreshold) and not float(self.threshold) > 0:
            raise ValueError("threshold must be positive")
        if self.min_element_size is not None:
            m = tuple(float(x) for x in self.min_element_size)
            if len(m) != 2 or min(m) <= 0:
                raise ValueError("min_element_size must be two positive numbers")
            object.__setattr__(self, "min_element_size", m)
        if self.significant_tol is not None and not self.significant_tol > 0:
            raise ValueError("significant_tol must be positive")
        if not (self.significant_weight > 0 and self.significant_final_weight > 0):
            raise ValueError("significant weights must be positive")

    @property
    def alpha2(self):
        return 1.0 - self.alpha1

    def replace(self, **kw):
        return replace(self, **kw)

    @classmethod
    def preset(cls, name):
        try:
            kw = PRESETS[name.upper()]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
        return cls(name=name.upper(), **kw)

    # -- text form ------------------------------------------------------

    def to_text(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, DepthThreshold):
                s = v.to_text()
            elif isinstance(v, tuple):
                s = ",".join(repr(x) for x in v)
            else:
                s = repr(v) if isinstance(v, float) else str(v)
            out.append(f"{f.name} = {s}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text, source="<config>"):
        kw = {}
        base = None
        names = {f.name: f for f in fields(cls)}
        for n, line in enumerate(text.splitlines(), start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if "=" not in s:
                raise ValueError(f"{source}:{n}: expected key = value")
            key, val = (t.strip() for t in s.split("=", 1))
            if key == "preset":
                base = val
                continue
            if key not in names:
                raise ValueError(f"{source}:{n}: unknown key {key!r}")
            try:
                kw[key] = _parse_value(key, val)
            except ValueError as exc:
                raise ValueError(f"{source}:{n}: {exc}") from None
        cfg = cls.preset(base) if base else cls()
        return cfg.replace(**kw)


def _parse_value(key, val):
    if key == "threshold":
        if ":" in val:
            return DepthThreshold.from_text(val)
        return float(val)
    if key in ("degrees", "initial_grid"):
        return tuple(int(x) for x in val.split(","))
    if key == "min_element_size":
        return None if val.lower() == "none" else tuple(float(x) for x in val.split(","))
    if key in ("max_iterations", "ls_iterations", "mba_passes"):
        return int(val)
    if key == "name":
        return val
    if key == "significant_tol" and val.lower() == "none":
        return None
    return float(val)


def read_config(path):
    with open(path) as fh:
        return FitConfig.from_text(fh.read(), source=str(path))


def write_config(cfg, path):
    with open(path, "w") as fh:
        fh.write(cfg.to_text())


_VAR = DepthThreshold.linear_range(0.31176, 0.20022)

PRESETS = {
    "F7": dict(max_iterations=7, threshold=0.5),
    "V7": dict(max_iterations=7, threshold=_VAR),
    "V9": dict(max_iterations=9, threshold=_VAR),
    "V9E1": dict(max_iterations=9, threshold=_VAR, min_element_size=(1.0, 1.0)),
    "V9E2": dict(max_iterations=9, threshold=_VAR, min_element_size=(2.0, 2.0)),
    "WM7": dict(max_iterations=7, threshold=0.5),
    "FS7": dict(max_iterations=7, threshold=0.5, significant_tol=0.2),
    "FS9": dict(max_iterations=9, threshold=0.5, significant_tol=0.2),
}
