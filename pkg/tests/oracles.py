"""Independent reference implementations used to pin expected values.

Everything here is deliberately plain Python over lists and dicts: a direct
double loop over cells and integer displacements, with its own closed-form
kernel profiles and its own boundary bookkeeping. No code is shared with the
package's evaluation path.
"""

from __future__ import annotations

import math

BALL_VOLUME = {1: 2.0, 2: math.pi}


def profile_value(family: str, width: float, dim: int, r: float) -> float:
    if family == "gaussian":
        return math.exp(-0.5 * (r / width) ** 2) / (2.0 * math.pi * width * width) ** (dim / 2.0)
    if family == "exponential":
        surface = 2.0 if dim == 1 else 2.0 * math.pi
        return math.exp(-r / width) / (surface * math.factorial(dim - 1) * width**dim)
    if family == "tophat":
        return (1.0 / (BALL_VOLUME[dim] * width**dim)) if r <= width * (1 + 1e-12) else 0.0
    raise ValueError(family)


def default_cutoff(family: str) -> float:
    return 1.0 if family == "tophat" else 4.0


def stencil(family, width, cutoff_mult, eps, spacings, cell_volume):
    """All (offset tuple, weight, |h|) with 0 < |h| <= cutoff * width * eps."""
    dim = len(spacings)
    cut = cutoff_mult * width * eps
    maxes = [int(math.floor(cut / h * (1 + 1e-12))) for h in spacings]
    out = []
    ranges = [range(-m, m + 1) for m in maxes]
    if dim == 1:
        combos = [(a,) for a in ranges[0]]
    else:
        combos = [(a, b) for a in ranges[0] for b in ranges[1]]
    for off in combos:
        if all(o == 0 for o in off):
            continue
        rr = math.sqrt(sum((o * h) ** 2 for o, h in zip(off, spacings)))
        if rr > cut * (1 + 1e-12):
            continue
        w = profile_value(family, width, dim, rr / eps) / eps**dim * cell_volume
        out.append((off, w, rr))
    return out


def moments(sten):
    m0 = sum(w for _, w, _ in sten)
    m1 = sum(w * rr for _, w, rr in sten)
    return m0, m1


def _resolve(idx, off, cells, modes, interior):
    """Neighbor lookup: returns ('cell', index) | ('const', value) | None.

    modes[a] is ('periodic',) or ('clamped', lo, hi) or ('open',).
    """
    out = list(idx)
    const = None
    for a, (i, o) in enumerate(zip(idx, off)):
        j = i + o
        if 0 <= j < cells[a]:
            out[a] = j
            continue
        kind = modes[a][0]
        if kind == "periodic":
            out[a] = j % cells[a]
        elif interior or kind == "open":
            return None
        else:
            const = modes[a][1] if j < 0 else modes[a][2]
            out[a] = j
    if const is not None:
        return ("const", const)
    return ("cell", tuple(out))


def s_abs(t, delta):
    return math.sqrt(t * t + delta * delta) - delta


def energy_oracle(u, rho, cells, extents, modes, sten, eps, delta, interior, potential):
    """Direct double-loop evaluation of all three terms plus I.

    u, rho are nested lists indexed like the grid; potential is a plain
    callable W(z). Returns a dict with the term values and the I table.
    """
    dim = len(cells)
    spacings = [e / n for e, n in zip(extents, cells)]
    vol = 1.0
    for h in spacings:
        vol *= h

    if dim == 1:
        indices = [(i,) for i in range(cells[0])]
    else:
        indices = [(i, j) for i in range(cells[0]) for j in range(cells[1])]

    def at(table, idx):
        v = table
        for i in idx:
            v = v[i]
        return v

    inhom = {}
    e_pot = 0.0
    e_exch = 0.0
    for idx in indices:
        ui = at(u, idx)
        e_pot += potential(ui)
        acc = 0.0
        for off, w, _ in sten:
            hit = _resolve(idx, off, cells, modes, interior)
            if hit is None:
                continue
            v = at(u, hit[1]) if hit[0] == "cell" else hit[1]
            s = s_abs(v - ui, delta)
            acc += w * s
            e_exch += w * s * s
        inhom[idx] = acc / eps
    e_pot *= vol / eps
    e_exch *= vol / eps
    e_surf = 0.0
    for idx in indices:
        m = inhom[idx] - at(rho, idx)
        e_surf += m * m
    e_surf *= eps * vol
    return {
        "potential": e_pot,
        "exchange": e_exch,
        "surfactant": e_surf,
        "total": e_pot + e_exch + e_surf,
        "inhomogeneity": inhom,
    }


def gaussian_mass_1d(width, radius):
    """Integral of the unit-mass 1d gaussian profile over [-radius, radius]."""
    return math.erf(radius / (width * math.sqrt(2.0)))


def gaussian_mass_2d(width, radius):
    """Integral of the unit-mass 2d gaussian profile over the disk of given radius."""
    return 1.0 - math.exp(-0.5 * (radius / width) ** 2)


def projection_oracle(values, volume, target):
    """Mass-target water filling by exact sort, for cross-checking bisection."""
    vals = sorted(values, reverse=True)
    n = len(vals)
    # find the largest support size s with positive water level
    best = None
    csum = 0.0
    for s in range(1, n + 1):
        csum += vals[s - 1]
        lam = (csum - target / volume) / s
        if vals[s - 1] > lam and (s == n or vals[s] <= lam):
            best = lam
            break
    if best is None:
        best = (sum(vals) - target / volume) / n
    return [max(v - best, 0.0) for v in values]
