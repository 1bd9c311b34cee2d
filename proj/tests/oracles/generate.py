"""Independent reference values for the unit tests.

Run from the repository root: python3 tests/oracles/generate.py
Writes tests/oracles/oracles.json. Nothing here imports the C++ library.
"""

import json
import math
from pathlib import Path

import numpy as np
from scipy import integrate, linalg, ndimage, optimize, stats

out = {}


# ---------------------------------------------------------------- metric graph
out["radial_measure_total_zmax10"] = math.pi * 10.0
out["norm_H_z_T2"] = integrate.quad(lambda z: z * z * 2.0, 0.0, 1.0)[0] ** 0.5
out["norm_W12_z"] = (integrate.quad(lambda z: z * z, 0, 1)[0] + integrate.quad(lambda z: 1.0, 0, 1)[0]) ** 0.5


def p1_interval(cells, alpha=1.0, T=1.0, a=0.0, b=1.0):
    z = np.linspace(a, b, cells + 1)
    h = np.diff(z)
    n = cells + 1
    K = np.zeros((n, n))
    m = np.zeros(n)
    for i in range(cells):
        k = 0.5 * alpha / h[i]
        K[i, i] += k
        K[i + 1, i + 1] += k
        K[i, i + 1] -= k
        K[i + 1, i] -= k
        m[i] += 0.5 * h[i] * T
        m[i + 1] += 0.5 * h[i] * T
    return z, K, m


# discrete Neumann eigenvalues of (1/2) d^2/dz^2 on (0,1)
neumann = {}
for cells in (8, 16, 32, 64):
    z, K, m = p1_interval(cells)
    lam = linalg.eigh(K, np.diag(m), eigvals_only=True)
    neumann[str(cells)] = float(lam[1])
out["neumann_first_eigenvalue"] = neumann
out["neumann_continuum"] = math.pi ** 2 / 2.0
out["heat_first_mode_decay_t0.1"] = math.exp(-math.pi ** 2 * 0.1 / 2.0)

# ---------------------------------------------------------------- geometry
tilt = 0.2
xm = optimize.brentq(lambda x: 4 * x * (x * x - 1) + tilt, -1.5, -0.5)
c0 = -((xm * xm - 1) ** 2 + tilt * xm)


def dw(x, y):
    return (x * x - 1) ** 2 + tilt * x + c0 + y * y


# brute-force scan: cells of a 2000^2 grid where both gradient components change sign
n = 2000
xs = np.linspace(-2.5, 2.5, n)
X, Y = np.meshgrid(xs, xs, indexing="xy")
gx = 4 * X * (X * X - 1) + tilt
gy = 2 * Y
sx = np.sign(gx)
sy = np.sign(gy)
chg = np.zeros((n - 1, n - 1), dtype=bool)
for a in (sx, sy):
    c = (a[:-1, :-1] != a[1:, :-1]) | (a[:-1, :-1] != a[:-1, 1:]) | (a[:-1, :-1] != a[1:, 1:])
    chg = (chg & c) if chg.any() else c
both = ((sx[:-1, :-1] != sx[:-1, 1:]) | (sx[:-1, :-1] != sx[1:, 1:])) & (
    (sy[:-1, :-1] != sy[1:, :-1]) | (sy[:-1, :-1] != sy[1:, 1:]))
lab, count = ndimage.label(both)
crit = []
for k in range(1, count + 1):
    jj, ii = np.nonzero(lab == k)
    x = float(xs[ii].mean() + 0.5 * (xs[1] - xs[0]))
    crit.append(x)
crit.sort()
out["double_well_critical_x"] = crit
out["double_well_critical_levels"] = [float(dw(x, 0.0)) for x in crit]

# component counts of {H < z} bands at probe levels (flood fill, 8-connectivity off)
levels = sorted(out["double_well_critical_levels"])
probes = [0.5 * (levels[0] + levels[1]), 0.5 * (levels[1] + levels[2]), levels[2] + 0.5, levels[2] + 2.0]
H = dw(X, Y)
dz = 0.02
counts = []
for z in probes:
    band = np.abs(H - z) < dz
    _, c = ndimage.label(band)
    counts.append(int(c))
out["double_well_probe_levels"] = probes
out["double_well_probe_components"] = counts

# which minimum the point (-1, 0.1) flows to: flood fill of the sublevel set below the saddle
zp = dw(-1.0, 0.1)
sub = H < zp + 1e-12
lab, _ = ndimage.label(sub)
i = int(np.argmin(np.abs(xs - (-1.0))))
j = int(np.argmin(np.abs(xs - 0.1)))
comp = lab[j, i]
out["double_well_point_component_min_x_sign"] = float(np.sign(X[lab == comp].mean()))

# example 2 at z = 1: r^2 + sqrt(1 + r^2) - 1 = 1, dense polygon length
r = optimize.brentq(lambda r: r * r + math.sqrt(1 + r * r) - 2.0, 0.1, 2.0)
t = np.linspace(0.0, 2 * math.pi, 1_000_001)
px, py = r * np.cos(t), r * np.sin(t)
out["example2_length_z1"] = float(np.sum(np.hypot(np.diff(px), np.diff(py))))

# disk chord length at a few levels
out["disk_chord"] = {str(z): 2.0 * math.sqrt(1 - z * z) for z in (-0.9, -0.5, 0.0, 0.3, 0.75)}

# ---------------------------------------------------------------- generator
# assumption gamma, radial graph, theta = (1+z)^-2.5: 4 k^2 z/(1+z)^2, max at z=1
kap = 2.5
out["gamma_check_power_sup"] = optimize.minimize_scalar(lambda z: -4 * kap ** 2 * z / (1 + z) ** 2, bounds=(0, 20),
                                                        method="bounded").fun * -1.0

# ---------------------------------------------------------------- skeleton
# Duhamel sum on the modal basis of the discrete operator (theta = 1)
cells, dt, T = 8, 0.05, 1.0
z, K, m = p1_interval(cells)
M = np.diag(m)
E = np.stack([np.ones_like(z), np.cos(math.pi * z)], axis=1)
steps = int(round(T / dt))
phi = np.array([[1.0, math.cos(3.0 * n * dt)] for n in range(steps)])
u0 = z * z
lam, V = linalg.eigh(K, M)  # V^T M V = I
R = 1.0 / (1.0 + dt * lam)
coef0 = V.T @ M @ u0
zT = (R ** steps) * coef0
for n_ in range(steps):
    forcing = V.T @ (M @ (E @ phi[n_])) * dt
    zT += (R ** (steps - n_)) * forcing
out["duhamel_terminal"] = list(map(float, V @ zT))

# ---------------------------------------------------------------- deviations
out["gaussian_tail_x1"] = float(stats.norm.sf(1.0))
out["gaussian_tail_1e-6_x"] = float(stats.norm.isf(1e-6))
x_ref, eps_ref = 7.5, 0.01
out["ldp_exact_scaled_log"] = {str(e): float(-e * stats.norm.logsf(x_ref * math.sqrt(eps_ref / e)) /
                                             (x_ref ** 2 * eps_ref / 2.0)) for e in (0.04, 0.02, 0.01)}

# ---------------------------------------------------------------- audit
def tail_pow(r, p=1.5):
    return integrate.quad(lambda z: z ** -p, r, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)[0]


def moment_pow(r, eps, p=1.5):
    return integrate.quad(lambda z: z * z ** -p, r - eps, r, epsabs=0.0, epsrel=1e-13)[0]


ladder = [10.0, 40.0, 160.0, 640.0]
out["noncompact_pow15"] = {
    "r": ladder,
    "tail": [tail_pow(r) for r in ladder],
    "moment": [moment_pow(r, 1.0) for r in ladder],
}
out["noncompact_exp"] = {
    "r": ladder[:2],
    "tail": [integrate.quad(lambda z: math.exp(-z), r, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)[0] for r in ladder[:2]],
    "moment": [integrate.quad(lambda z: z * math.exp(-z), r - 1.0, r, epsabs=0.0, epsrel=1e-13)[0] for r in ladder[:2]],
}
out["power_tail_integral"] = {str(Z): integrate.quad(lambda z: (z + 1.0) ** -2.5, Z, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)[0] for Z in (0.0, 3.0, 50.0)}
out["exp_sqrt_tail_integral"] = {
    str(Z): integrate.quad(lambda z: math.exp(-(math.sqrt(z + 1.0) - 1.0)), Z, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    for Z in (0.0, 3.0, 50.0)}

Path(__file__).with_name("oracles.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
print("wrote", len(out), "entries")
