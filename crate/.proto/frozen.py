from mpmath import mp, mpf, pi, exp, sqrt, quad, log
mp.dps = 40

f0 = mpf(2); A = mpf(1)

def ricker(t):
    t = mpf(t)
    return A * (1 - 2*pi**2*f0**2*t**2) * exp(-pi**2*f0**2*t**2)

def dricker(t):
    t = mpf(t)
    return A * exp(-pi**2*f0**2*t**2) * (-6*pi**2*f0**2*t + 4*pi**4*f0**4*t**3)

print("ricker(0.0)   =", mp.nstr(ricker(0), 20))
print("ricker(0.25)  =", mp.nstr(ricker('0.25'), 20))
print("ricker(-0.1)  =", mp.nstr(ricker('-0.1'), 20))
print("ricker(0.5)   =", mp.nstr(ricker('0.5'), 20))
print("dricker(0.25) =", mp.nstr(dricker('0.25'), 20))
print("dricker(-0.1) =", mp.nstr(dricker('-0.1'), 20))
print("dricker(0.13) =", mp.nstr(dricker('0.13'), 20))

# analytic half-plane field: u(x,t) = 1/(pi c0^2) int_0^sqrt(th0) f(th0 - tau - v^2)/sqrt(2b + v^2) dv
c0 = mpf('6.5')
def analytic_u(dist, tau, t):
    b = mpf(dist) / c0
    th0 = mpf(t) - b
    if th0 <= 0:
        return mpf(0)
    integ = lambda v: ricker(th0 - mpf(tau) - v*v) / sqrt(2*b + v*v)
    return quad(integ, [0, sqrt(th0)]) / (pi * c0**2)

import math
d7 = math.hypot(32.5 - 50.0, 0.0 + 30.0)
print("dist station7 =", d7)
for t in ('15.2','16.0','17.5'):
    print(f"analytic_u(d7, tau=10, t={t}) =", mp.nstr(analytic_u(d7, 10, t), 18))
# a second geometry: station 1 (2.5,0) from (50,-30): dist
d1 = math.hypot(2.5-50.0, 30.0)
print("dist station1 =", d1)
print("analytic_u(d1, tau=10, t=19.0) =", mp.nstr(analytic_u(d1, 10, '19.0'), 18))

# quintic delta reference values, h=0.25 (zeta = |x|/h)
def delta1d(x, h):
    z = abs(mpf(x)) / mpf(h)
    if z <= 1:
        p = 1 - mpf(5)/4*z**2 - mpf(35)/12*z**3 + mpf(21)/4*z**4 - mpf(25)/12*z**5
    elif z <= 2:
        p = -4 + mpf(75)/4*z - mpf(245)/8*z**2 + mpf(545)/24*z**3 - mpf(63)/8*z**4 + mpf(25)/24*z**5
    elif z <= 3:
        p = 18 - mpf(153)/4*z + mpf(255)/8*z**2 - mpf(313)/24*z**3 + mpf(21)/8*z**4 - mpf(5)/24*z**5
    else:
        p = mpf(0)
    return p / mpf(h)
for x in ('0','0.1','0.25','0.3','0.5','0.6','0.74','0.75','0.76'):
    print(f"delta1d({x}, 0.25) =", mp.nstr(delta1d(x, '0.25'), 18))
# moments at shift 0.4*h
h = mpf('0.25'); s = mpf('0.1')
m0 = sum(delta1d(k*h - s, h) for k in range(-5, 6)) * h
m1 = sum((k*h - s) * delta1d(k*h - s, h) for k in range(-5, 6)) * h
m2 = sum((k*h - s)**2 * delta1d(k*h - s, h) for k in range(-5, 6)) * h
print("moment0 (shift 0.1, h=0.25) =", mp.nstr(m0, 18))
print("moment1 =", mp.nstr(m1, 18))
print("moment2 =", mp.nstr(m2, 18))

# velocity model frozen samples
from mpmath import sin
def vel_twolayer_deep(x, z):
    x = mpf(x); z = mpf(z)
    if z >= -15:
        return mpf('5.2') - mpf('0.06')*z + mpf('0.2')*sin(pi*x/25)
    return mpf('6.2') + mpf('0.2')*sin(pi*x/25)
print("twolayer_deep(30, -10)  =", mp.nstr(vel_twolayer_deep(30, -10), 18))
print("twolayer_deep(30, -20)  =", mp.nstr(vel_twolayer_deep(30, -20), 18))
print("twolayer_deep(12.5, 0)  =", mp.nstr(vel_twolayer_deep('12.5', 0), 18))
