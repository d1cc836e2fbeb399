#!/usr/bin/env python3
"""Prototype of the homogeneous-medium engine + locator loop to verify
signs, magnitudes, and a few frozen oracle values before the Rust build."""
import numpy as np

c0 = 6.5
f0 = 2.0
A = 1.0
PI = np.pi

def ricker(t):
    return A * (1 - 2 * PI**2 * f0**2 * t**2) * np.exp(-PI**2 * f0**2 * t**2)

def dricker(t):
    return A * np.exp(-PI**2 * f0**2 * t**2) * (-6 * PI**2 * f0**2 * t + 4 * PI**4 * f0**4 * t**3)

def green_cells(b, dt, nt):
    # integral of H(s-b)/(2 pi c0^2 sqrt(s^2-b^2)) over each sample cell
    edges = (np.arange(nt + 1) - 0.5) * dt
    lo = np.clip(edges[:-1], b, None)
    hi = np.clip(edges[1:], b, None)
    def F(s):
        s = np.asarray(s, float)
        return np.log(s + np.sqrt(np.clip(s * s - b * b, 0, None)))
    return (F(hi) - F(lo)) / (2 * PI * c0 * c0)

def trace(xi, tau, x, dt, nt):
    b = np.hypot(x[0] - xi[0], x[1] - xi[1]) / c0
    if b < 1e-9:
        raise ValueError("singular")
    G = green_cells(b, dt, nt)
    f = ricker(np.arange(nt) * dt - tau)
    return np.convolve(f, G)[:nt]

# quadrature route (v-substitution) for cross-check
def analytic_u(xi, tau, x, t):
    b = np.hypot(x[0] - xi[0], x[1] - xi[1]) / c0
    th0 = t - b
    if th0 <= 0:
        return 0.0
    # u = 1/(pi c0^2) * int_0^{sqrt(th0)} f(th0 - tau - v^2)/sqrt(2b+v^2) dv
    vmax = np.sqrt(th0)
    n = 20001
    v = np.linspace(0, vmax, n)
    integ = ricker(th0 - tau - v * v) / np.sqrt(2 * b + v * v)
    from scipy.integrate import simpson
    return simpson(integ, x=v) / (PI * c0 * c0)

stations = [(5.0 * r - 2.5, 0.0) for r in range(1, 21)]
xiT = np.array([50.0, -30.0]); tauT = 10.0
xi0_ex = np.array([52.0, -30.3])  # Example 2.1 initial
dt = 0.015
T = 22.0
nt = int(T / dt) + 1
ts = np.arange(nt) * dt

print("== conv vs quadrature cross-check (station 7, few samples) ==")
tr7 = trace(xiT, tauT, stations[6], dt, nt)
for t in (15.5, 16.0, 17.0, 18.5):
    n = int(round(t / dt))
    q = analytic_u(xiT, tauT, stations[6], ts[n])
    print(f"t={ts[n]:.3f}  conv={tr7[n]: .6e}  quad={q: .6e}  rel={abs(tr7[n]-q)/max(abs(q),1e-30):.2e}")

print("\n== e-curves / tau* for all 20 stations (Example 2.4 question) ==")
d_all = [trace(xiT, tauT, s, dt, nt) for s in stations]
s_all = [trace(xi0_ex, tauT, s, dt, nt) for s in stations]

def curve(d, s, M):
    # e(m*dt) with shifted synthetic zero-padded
    out = np.empty(2 * M + 1)
    nd = np.linalg.norm(d)
    for i, m in enumerate(range(-M, M + 1)):
        sh = np.zeros_like(s)
        if m >= 0:
            sh[m:] = s[:len(s) - m] if m > 0 else s
        else:
            sh[:m] = s[-m:]
        out[i] = np.linalg.norm(d - sh) / nd
    return out

def parabolic_min(curve_vals, M, dt):
    i = int(np.argmin(curve_vals))
    tau = (i - M) * dt
    if 0 < i < len(curve_vals) - 1:
        y1, y2, y3 = curve_vals[i - 1], curve_vals[i], curve_vals[i + 1]
        den = y1 - 2 * y2 + y3
        if den > 0:
            tau += 0.5 * dt * (y1 - y3) / den
    return tau

M = int((T / 2) / dt)
taustars = []
geo = []
for r in range(20):
    cv = curve(d_all[r], s_all[r], M)
    ts_r = parabolic_min(cv, M, dt)
    taustars.append(ts_r)
    a = np.hypot(stations[r][0] - xiT[0], stations[r][1] - xiT[1])
    bb = np.hypot(stations[r][0] - xi0_ex[0], stations[r][1] - xi0_ex[1])
    geo.append((a - bb) / c0)
    print(f"r={r+1:2d}  tau*={ts_r: .4f}  geo={(a-bb)/c0: .4f}")

print("\nsign pattern: negative:", [i+1 for i in range(20) if taustars[i] < 0])
print("sign pattern: positive:", [i+1 for i in range(20) if taustars[i] > 0])

# station 7 curve extremes (Eq-18 style invariant)
cv7 = curve(d_all[6], s_all[6], M)
print(f"\nstation 7: min e = {cv7.min():.4f} at tau*={taustars[6]:.4f}; e(0) = {cv7[M]:.4f}")

print("\n== select_receivers on computed tau* (n=6) ==")
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
    return sorted(best[2] + 1), best[1]
sel, taubar = select(taustars, 6)
print("selected stations:", sel, " tau_bar=", round(taubar, 4))

print("\n== adjoint kernels + linearization at Example 2.1 initial ==")
def field_history(eta, g, query, dt, nt, delta=0.125):
    # w at query and central-difference gradient via +- delta offsets
    def conv_at(p):
        # terminal-value adjoint: w(t) = int_t^T a(s) G(s-t) ds
        # = reverse(causal convolve(reverse(a), G))
        b = np.hypot(p[0] - eta[0], p[1] - eta[1]) / c0
        G = green_cells(b, dt, nt)
        return np.convolve(g[::-1], G)[:nt][::-1]
    w0 = conv_at(query)
    wxp = conv_at((query[0] + delta, query[1])); wxm = conv_at((query[0] - delta, query[1]))
    wzp = conv_at((query[0], query[1] + delta)); wzm = conv_at((query[0], query[1] - delta))
    return w0, (wxp - wxm) / (2 * delta), (wzp - wzm) / (2 * delta)

def chi_r(d, s):
    return np.sum((d - s) ** 2) / (2 * np.sum(d ** 2))

def kernels_at(xi, tau, r):
    d = d_all[r]
    s = trace(xi, tau, stations[r], dt, nt)
    chi = chi_r(d, s)
    energy_d = np.sum(d * d) * dt
    g = (d - s) / energy_d
    w, wx, wz = field_history(stations[r], g, xi, dt, nt)
    f = ricker(ts - tau)
    fp = dricker(ts - tau)
    kx = np.sum(wx * f) * dt
    kz = np.sum(wz * f) * dt
    kt = -np.sum(w * fp) * dt
    return np.array([kx, kz]), kt, chi

xi_e = xi0_ex.copy(); tau_e = 10.0
print("direction (0, 0.1):")
for r in [0, 6, 10, 19]:
    kxi, kt, chi0 = kernels_at(xi_e, tau_e, r)
    for scale in (1.0, 0.5):
        dxi = np.array([0.0, 0.1 * scale])
        pred = -(kxi @ dxi)
        chi1 = chi_r(d_all[r], trace(xi_e + dxi, tau_e, stations[r], dt, nt))
        meas = chi1 - chi0
        print(f"  r={r+1:2d} s={scale}  pred={pred: .5e} meas={meas: .5e} rel={abs(pred-meas)/abs(meas):.3f}")

print("combined ((0.1,0), 0.02):")
worst = 0
for r in range(20):
    kxi, kt, chi0 = kernels_at(xi_e, tau_e, r)
    dxi = np.array([0.1, 0.0]); dtau = 0.02
    pred = -(kxi @ dxi + kt * dtau)
    chi1 = chi_r(d_all[r], trace(xi_e + dxi, tau_e + dtau, stations[r], dt, nt))
    meas = chi1 - chi0
    rel = abs(pred - meas) / abs(meas)
    worst = max(worst, rel)
    if r in (0, 6, 10, 19):
        print(f"  r={r+1:2d}  pred={pred: .5e} meas={meas: .5e} rel={rel:.3f}")
print("worst rel over 20 stations:", round(worst, 4))

print("\n== mini locate, New mode, from (45,-40), tau0=0 ==")
def locate(xi0, tau0, mode="new", K=30, eps=0.01, sigma=100.0, n_sel=6):
    xi = np.array(xi0, float); tau = tau0
    for k in range(K):
        s_set = [trace(xi, tau, st, dt, nt) for st in stations]
        if mode == "new":
            tstars = []
            for r in range(20):
                cv = curve(d_all[r], s_set[r], M)
                tstars.append(parabolic_min(cv, M, dt))
            sel, tb = select(tstars, n_sel)
            # refine on summed curves of selected
            csum = None
            for r in [q - 1 for q in sel]:
                cv = curve(d_all[r], s_set[r], M)
                csum = cv if csum is None else csum + cv
            tstar = parabolic_min(csum, M, dt)
            tau = tau + tstar
            s_set = [trace(xi, tau, st, dt, nt) for st in stations]
            use = [q - 1 for q in sel]
        else:
            use = list(range(20))
        rows = []; rhs = []
        sumchi = 0.0
        for r in use:
            kxi, kt, chi = kernels_at(xi, tau, r)
            if chi <= 0:
                return xi, tau, k, "converged-exact"
            rows.append([kxi[0] / chi, kxi[1] / chi, kt / chi]); rhs.append(1.0)
            sumchi += chi
        sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=1e-10)
        dxi = sol[:2]; dtau = sol[2]
        nrm = np.linalg.norm(dxi)
        print(f"  k={k} xi=({xi[0]:8.4f},{xi[1]:8.4f}) tau={tau:7.4f} |dxi|={nrm:8.4f} dtau={dtau: .4f} sumchi={sumchi:.4f}")
        if nrm < eps:
            return xi + dxi, tau + dtau, k + 1, "converged"
        if nrm > sigma:
            return xi + dxi, tau, k + 1, "diverged"
        xi = xi + dxi
        xi[1] = min(xi[1], 0.0)
        if mode != "new":
            tau = tau + dtau
    return xi, tau, K, "maxiters"

xi_f, tau_f, it, st = locate((45.0, -40.0), 0.0, "new")
print(f"result: {st} after {it} iters  xi=({xi_f[0]:.4f},{xi_f[1]:.4f}) tau={tau_f:.4f}")

print("\n== conventional from (50.5,-30.2), tau0=10 ==")
xi_f, tau_f, it, st = locate((50.5, -30.2), 10.0, "conventional")
print(f"result: {st} after {it} iters  xi=({xi_f[0]:.4f},{xi_f[1]:.4f}) tau={tau_f:.4f}")
