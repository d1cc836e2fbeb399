#!/usr/bin/env python3
"""Probe 2: kernel ground-truth validation, AC3 configuration survey,
Example-2.1 invariant feasibility, basin spot checks, shift recovery."""
import numpy as np
import time

c0 = 6.5
f0 = 2.0
A = 1.0
PI = np.pi

def ricker(t):
    return A * (1 - 2 * PI**2 * f0**2 * t**2) * np.exp(-PI**2 * f0**2 * t**2)

def dricker(t):
    return A * np.exp(-PI**2 * f0**2 * t**2) * (-6 * PI**2 * f0**2 * t + 4 * PI**4 * f0**4 * t**3)

def green_cells(b, dt, nt):
    edges = (np.arange(nt + 1) - 0.5) * dt
    lo = np.clip(edges[:-1], b, None)
    hi = np.clip(edges[1:], b, None)
    def F(s):
        s = np.asarray(s, float)
        return np.log(s + np.sqrt(np.clip(s * s - b * b, 0, None)))
    return (F(hi) - F(lo)) / (2 * PI * c0 * c0)

stations = [(5.0 * r - 2.5, 0.0) for r in range(1, 21)]
xiT = np.array([50.0, -30.0]); tauT = 10.0
dt = 0.015
T = 22.0
nt = int(T / dt) + 1
ts = np.arange(nt) * dt
M = int((T / 2) / dt)

def trace(xi, tau, x):
    b = np.hypot(x[0] - xi[0], x[1] - xi[1]) / c0
    if b < 1e-9:
        raise ValueError("singular")
    G = green_cells(b, dt, nt)
    f = ricker(ts - tau)
    return np.convolve(f, G)[:nt]

d_all = [trace(xiT, tauT, s) for s in stations]
energy_d = [np.sum(d * d) * dt for d in d_all]

def chi_at(xi, tau, r):
    s = trace(xi, tau, stations[r])
    d = d_all[r]
    return np.sum((d - s) ** 2) / (2 * np.sum(d ** 2))

def field_history(eta, g, query, delta=0.125):
    def conv_at(p):
        b = np.hypot(p[0] - eta[0], p[1] - eta[1]) / c0
        G = green_cells(b, dt, nt)
        return np.convolve(g[::-1], G)[:nt][::-1]
    w0 = conv_at(query)
    wxp = conv_at((query[0] + delta, query[1])); wxm = conv_at((query[0] - delta, query[1]))
    wzp = conv_at((query[0], query[1] + delta)); wzm = conv_at((query[0], query[1] - delta))
    return w0, (wxp - wxm) / (2 * delta), (wzp - wzm) / (2 * delta)

def kernels_at(xi, tau, r):
    d = d_all[r]
    s = trace(xi, tau, stations[r])
    chi = np.sum((d - s) ** 2) / (2 * np.sum(d ** 2))
    g = (d - s) / energy_d[r]
    w, wx, wz = field_history(stations[r], g, xi)
    f = ricker(ts - tau)
    fp = dricker(ts - tau)
    kx = np.sum(wx * f) * dt
    kz = np.sum(wz * f) * dt
    kt = -np.sum(w * fp) * dt
    return kx, kz, kt, chi

print("== 1. kernel vs tiny-step derivative at (52,-30.3), tau=10 ==")
xi_e = np.array([52.0, -30.3]); tau_e = 10.0
def d5(f, h):
    return (f(-2*h) - 8*f(-h) + 8*f(h) - f(2*h)) / (12*h)
for r in [0, 6, 10, 19]:
    kx, kz, kt, chi = kernels_at(xi_e, tau_e, r)
    gx = d5(lambda e: chi_at(xi_e + np.array([e, 0.0]), tau_e, r), 0.004)
    gz = d5(lambda e: chi_at(xi_e + np.array([0.0, e]), tau_e, r), 0.004)
    gt = d5(lambda e: chi_at(xi_e, tau_e + e, r), 0.002)
    # convention: K = -grad(chi)
    print(f"  r={r+1:2d} kx={kx: .5e} vs -dchi/dx={-gx: .5e} rel={abs(kx+gx)/abs(gx):.4f}")
    print(f"        kz={kz: .5e} vs -dchi/dz={-gz: .5e} rel={abs(kz+gz)/abs(gz):.4f}")
    print(f"        kt={kt: .5e} vs -dchi/dt={-gt: .5e} rel={abs(kt+gt)/abs(gt):.4f}")

print("\n== 2. AC3 candidate survey (per-station rel err, scales 0.1 / 0.05) ==")
cands = [
    ((50.5, -30.2), (0.0, 1.0)),
    ((50.5, -30.2), (1.0, 0.0)),
    ((50.0, -31.0), (0.0, 1.0)),
    ((50.0, -31.0), (1.0, 0.0)),
    ((51.0, -30.5), (0.0, 1.0)),
    ((50.5, -30.2), (0.7071, 0.7071)),
    ((50.3, -30.6), (0.0, 1.0)),
]
for pt, dirn in cands:
    pt = np.array(pt); dirn = np.array(dirn)
    kers = [kernels_at(pt, tauT, r) for r in range(20)]
    chi0 = [k[3] for k in kers]
    rels = {}
    minmeas = {}
    for scale in (1.0, 0.5):
        dxi = dirn * 0.1 * scale
        rl = []
        mm = 1e9
        for r in range(20):
            kx, kz, kt, c0r = kers[r]
            pred = -(kx * dxi[0] + kz * dxi[1])
            meas = chi_at(pt + dxi, tauT, r) - chi0[r]
            rl.append(abs(pred - meas) / abs(meas))
            mm = min(mm, abs(meas))
        rels[scale] = rl
        minmeas[scale] = mm
    m1 = max(rels[1.0]); m5 = max(rels[0.5])
    red = m1 / m5 if m5 > 0 else float("inf")
    w1 = int(np.argmax(rels[1.0])) + 1
    print(f"  pt=({pt[0]},{pt[1]}) dir=({dirn[0]:.2f},{dirn[1]:.2f})  max_rel@0.1={m1:.4f}(r={w1}) max_rel@0.05={m5:.4f} red={red:.2f} min|meas|={minmeas[1.0]:.2e}")

print("\n== 3. Example 2.1 invariant feasibility at (52,-30.3) ==")
kers_e = [kernels_at(xi_e, tau_e, r) for r in range(20)]
chi0_e = [k[3] for k in kers_e]
best = None
for dx, dz in [(1,0), (-1,0), (0,1), (0,-1), (0.7071,0.7071), (-0.7071,0.7071), (0.7071,-0.7071), (-0.7071,-0.7071)]:
    for st in (1.0, -1.0):
        res = {}
        for scale in (1.0, 0.5):
            dxi = np.array([dx, dz]) * 0.1 * scale
            dta = 0.02 * st * scale
            rl = []
            for r in range(20):
                kx, kz, kt, c0r = kers_e[r]
                pred = -(kx * dxi[0] + kz * dxi[1] + kt * dta)
                meas = chi_at(xi_e + dxi, tau_e + dta, r) - chi0_e[r]
                rl.append(abs(pred - meas) / abs(meas))
            res[scale] = max(rl)
        red = res[1.0] / res[0.5] if res[0.5] > 0 else float("inf")
        tag = f"dxi=({dx},{dz}) dtau={0.02*st:+.2f}"
        if best is None or res[1.0] < best[0]:
            best = (res[1.0], tag, res[0.5], red)
        print(f"  {tag:34s} max_rel@full={res[1.0]:.4f} @half={res[0.5]:.4f} red={red:.2f}")
print("  BEST:", best)

print("\n== 3b. separate probes at (52,-30.3): dxi-only and dtau-only ==")
for dx, dz in [(1,0), (0,1), (-1,0), (0,-1)]:
    rl1 = []; rl5 = []
    for r in range(20):
        kx, kz, kt, c0r = kers_e[r]
        for scale, rl in ((1.0, rl1), (0.5, rl5)):
            dxi = np.array([dx, dz]) * 0.1 * scale
            pred = -(kx * dxi[0] + kz * dxi[1])
            meas = chi_at(xi_e + dxi, tau_e, r) - chi0_e[r]
            rl.append(abs(pred - meas) / abs(meas))
    print(f"  dxi-only ({dx},{dz}): max@0.1={max(rl1):.4f} max@0.05={max(rl5):.4f} red={max(rl1)/max(rl5):.2f}")
for st in (1.0, -1.0):
    rl1 = []; rl5 = []
    for r in range(20):
        kx, kz, kt, c0r = kers_e[r]
        for scale, rl in ((1.0, rl1), (0.5, rl5)):
            dta = 0.02 * st * scale
            pred = -(kt * dta)
            meas = chi_at(xi_e, tau_e + dta, r) - chi0_e[r]
            rl.append(abs(pred - meas) / abs(meas))
    print(f"  dtau-only {0.02*st:+.2f}: max@full={max(rl1):.4f} max@half={max(rl5):.4f} red={max(rl1)/max(rl5):.2f}")

print("\n== 4. basin spot checks (homogeneous analog of the map) ==")
def curve(d, s):
    out = np.empty(2 * M + 1)
    nd = np.linalg.norm(d)
    for i, m in enumerate(range(-M, M + 1)):
        sh = np.zeros_like(s)
        if m > 0:
            sh[m:] = s[:len(s) - m]
        elif m == 0:
            sh[:] = s
        else:
            sh[:m] = s[-m:]
        out[i] = np.linalg.norm(d - sh) / nd
    return out

def parabolic_min(cv):
    i = int(np.argmin(cv))
    tau = (i - M) * dt
    if 0 < i < len(cv) - 1:
        y1, y2, y3 = cv[i - 1], cv[i], cv[i + 1]
        den = y1 - 2 * y2 + y3
        if den > 0:
            tau += 0.5 * dt * (y1 - y3) / den
    return tau

def select(vals, n):
    idx = np.argsort(vals)
    sv = np.array(vals)[idx]
    best = None
    for i in range(len(sv) - n + 1):
        w = sv[i:i + n]
        m = w.mean()
        ssd = ((w - m) ** 2).sum()
        if best is None or ssd < best[0] - 1e-15:
            best = (ssd, m, idx[i:i + n])
    return [q + 1 for q in best[2]], best[1]

def locate(xi0, tau0, mode, K=30, eps=0.01, sigma=100.0, n_sel=6):
    xi = np.array(xi0, float); tau = tau0
    for k in range(K):
        try:
            s_set = [trace(xi, tau, st) for st in stations]
        except ValueError:
            return xi, tau, k, "singular"
        if mode == "new":
            cvs = [curve(d_all[r], s_set[r]) for r in range(20)]
            tstars = [parabolic_min(cv) for cv in cvs]
            sel, tb = select(tstars, n_sel)
            csum = sum(cvs[q - 1] for q in sel)
            tstar = parabolic_min(csum)
            tau = tau + tstar
            use = [q - 1 for q in sel]
        else:
            use = list(range(20))
        rows = []; rhs = []
        for r in use:
            kx, kz, kt, chi = kernels_at(xi, tau, r)
            if chi <= 0:
                return xi, tau, k, "converged"
            rows.append([kx / chi, kz / chi, kt / chi]); rhs.append(1.0)
        sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=1e-10)
        dxi = sol[:2]; dtau = sol[2]
        nrm = np.linalg.norm(dxi)
        if nrm < eps:
            return xi + dxi, tau + dtau, k + 1, "converged"
        if nrm > sigma:
            return xi + dxi, tau, k + 1, "diverged"
        xi = xi + dxi
        xi[1] = min(xi[1], 0.0)
        if mode != "new":
            tau = tau + dtau
    return xi, tau, K, "maxiters"

t0 = time.time()
print("  conventional (tau0=10):")
for p in [(47.5, -30), (52.5, -30), (47.5, -35), (52.5, -25), (42.5, -30), (57.5, -30), (47.5, -25), (57.5, -35)]:
    xf, tf, it, stt = locate(p, 10.0, "conv")
    err = np.hypot(xf[0] - 50, xf[1] + 30)
    ok = stt == "converged" and err <= 0.5
    print(f"    from ({p[0]:5.1f},{p[1]:5.1f}): {stt:10s} it={it:2d} err={err:8.3f} success={ok}")
print("  new (tau0=0):")
for p in [(12.5, -5), (87.5, -5), (12.5, -65), (87.5, -65), (32.5, -50), (67.5, -15), (12.5, -35)]:
    xf, tf, it, stt = locate(p, 0.0, "new")
    err = np.hypot(xf[0] - 50, xf[1] + 30)
    ok = stt == "converged" and err <= 0.5
    print(f"    from ({p[0]:5.1f},{p[1]:5.1f}): {stt:10s} it={it:2d} err={err:8.3f} tau={tf:7.3f} success={ok}")
print(f"  [basin spot checks took {time.time()-t0:.1f}s]")

print("\n== 5. shift recovery: synthetic delayed by 1.7 s ==")
d7 = d_all[6]
s_shift = trace(xiT, tauT + 1.7, stations[6])
cv = curve(d7, s_shift)
tstar = parabolic_min(cv)
print(f"  tau* = {tstar:.6f}  (expect -1.7, tolerance one dt={dt})  min_e={cv.min():.2e}")
