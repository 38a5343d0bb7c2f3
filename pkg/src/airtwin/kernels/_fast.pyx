# cython: language_level=3
"""Compiled blip integrator; expression-for-expression mirror of pure.py.

Any change here must be applied to airtwin/kernels/pure.py as well (and
vice versa); the test suite asserts the two backends agree bit-for-bit.
"""

from libc.math cimport sqrt, exp, pow

import numpy as np

BACKEND = "fast"

cdef double _FT_PER_FL = 30.48
cdef double _NO_TARGET = 1e30


cdef class BlipIntegrator:
    cdef double[::1] grid, force, opposing, cas
    cdef int n
    cdef double mass, esf_c_cas, esf_c_mach
    cdef double t0, p0, lapse, h_trop, r_gas, gamma, g0
    cdef double expo, t_trop, p_trop, rho0, mu

    def __init__(self, fl_grid, force_curve, opposing_curve, cas_curve,
                 mass, esf_c_cas, esf_c_mach, t0, p0, lapse, h_trop, r_gas, gamma, g0):
        self.grid = np.ascontiguousarray(fl_grid, dtype=np.float64)
        self.force = np.ascontiguousarray(force_curve, dtype=np.float64)
        self.opposing = np.ascontiguousarray(opposing_curve, dtype=np.float64)
        self.cas = np.ascontiguousarray(cas_curve, dtype=np.float64)
        self.n = self.grid.shape[0]
        self.mass = mass
        self.esf_c_cas = esf_c_cas
        self.esf_c_mach = esf_c_mach
        self.t0 = t0
        self.p0 = p0
        self.lapse = lapse
        self.h_trop = h_trop
        self.r_gas = r_gas
        self.gamma = gamma
        self.g0 = g0
        self.expo = self.g0 / (self.lapse * self.r_gas)
        self.t_trop = self.t0 - self.lapse * self.h_trop
        self.p_trop = self.p0 * pow(self.t_trop / self.t0, self.expo)
        self.rho0 = self.p0 / (self.r_gas * self.t0)
        self.mu = (self.gamma - 1.0) / self.gamma

    cdef inline double _isa_temp(self, double h) nogil:
        if h > self.h_trop:
            return self.t_trop
        return self.t0 - self.lapse * h

    cdef inline double _pressure(self, double h) nogil:
        if h <= self.h_trop:
            return self.p0 * pow(1.0 - self.lapse * h / self.t0, self.expo)
        return self.p_trop * exp(-self.g0 * (h - self.h_trop) / (self.r_gas * self.t_trop))

    cdef inline double _cas2tas(self, double cas_ms, double h, double dt_k) nogil:
        cdef double p = self._pressure(h)
        cdef double rho = p / (self.r_gas * (self._isa_temp(h) + dt_k))
        cdef double inner = pow(1.0 + 0.5 * self.mu * self.rho0 / self.p0 * cas_ms * cas_ms, 1.0 / self.mu) - 1.0
        return sqrt((2.0 / self.mu) * (p / rho) * (pow(1.0 + (self.p0 / p) * inner, self.mu) - 1.0))

    cdef inline double _tas2cas(self, double tas_ms, double h, double dt_k) nogil:
        cdef double p = self._pressure(h)
        cdef double rho = p / (self.r_gas * (self._isa_temp(h) + dt_k))
        cdef double inner = pow(1.0 + 0.5 * self.mu * rho / p * tas_ms * tas_ms, 1.0 / self.mu) - 1.0
        return sqrt((2.0 / self.mu) * (self.p0 / self.rho0) * (pow(1.0 + (p / self.p0) * inner, self.mu) - 1.0))

    cdef inline double _interp(self, double[::1] values, double x) nogil:
        cdef int n = self.n
        cdef int lo, hi, mid
        cdef double x0
        if x <= self.grid[0]:
            return values[0]
        if x >= self.grid[n - 1]:
            return values[n - 1]
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.grid[mid] <= x:
                lo = mid
            else:
                hi = mid
        x0 = self.grid[lo]
        return values[lo] + (values[lo + 1] - values[lo]) * (x - x0) / (self.grid[lo + 1] - x0)

    cdef inline int _regime_at(self, double fl, int phase, int regime_default,
                               double transition_fl, double commanded_cas_ms) nogil:
        if commanded_cas_ms > 0.0 or phase == 0 or transition_fl >= _NO_TARGET:
            return regime_default
        if fl > transition_fl:
            return 1
        return 0

    cdef void _deriv(self, double fl, int phase, int regime_mach, double cruise_mach,
                     double cruise_cas_ms, double commanded_cas_ms, double commanded_rocd_ms,
                     double dt_k, double w_along, double w_cross, int levelled,
                     double* out) nogil:
        """out = [dfl/dt, ds/dt, tas, rocd m/s]."""
        cdef double h = fl * _FT_PER_FL
        cdef double t_isa = self._isa_temp(h)
        cdef double t_act = t_isa + dt_k
        cdef double sound = sqrt(self.gamma * self.r_gas * t_act)
        cdef double cas_ms, tas, mach, under, gs, force, opposing, thrust, drag, c, esf, rocd
        cdef int use_mach_esf
        if commanded_cas_ms > 0.0:
            cas_ms = commanded_cas_ms
            tas = self._cas2tas(cas_ms, h, dt_k)
            mach = tas / sound
            use_mach_esf = 0
        elif regime_mach:
            mach = cruise_mach
            tas = mach * sound
            use_mach_esf = 1
        else:
            if phase == 0:
                cas_ms = cruise_cas_ms
            else:
                cas_ms = self._interp(self.cas, fl)
            tas = self._cas2tas(cas_ms, h, dt_k)
            mach = tas / sound
            use_mach_esf = 0
        under = tas * tas - w_cross * w_cross
        if under < 0.0:
            under = 0.0
        gs = sqrt(under) + w_along
        if phase == 0 or levelled:
            out[0] = 0.0
            out[1] = gs
            out[2] = tas
            out[3] = 0.0
            return
        if commanded_rocd_ms != 0.0:
            rocd = commanded_rocd_ms if phase > 0 else -commanded_rocd_ms
            out[0] = rocd / _FT_PER_FL
            out[1] = gs
            out[2] = tas
            out[3] = rocd
            return
        force = self._interp(self.force, fl)
        opposing = self._interp(self.opposing, fl)
        if phase > 0:
            thrust = force
            drag = opposing
        else:
            thrust = opposing
            drag = force
        c = self.esf_c_mach if use_mach_esf else self.esf_c_cas
        esf = 1.0 / (1.0 + c * mach * mach)
        rocd = ((t_isa - dt_k) / t_isa) * ((thrust - drag) * tas / (self.mass * self.g0)) * esf
        out[0] = rocd / _FT_PER_FL
        out[1] = gs
        out[2] = tas
        out[3] = rocd

    cdef void _rk4(self, double fl, double dt, int phase, int regime, double cruise_mach,
                   double cruise_cas_ms, double commanded_cas_ms, double commanded_rocd_ms,
                   double dt_k, double w_along, double w_cross, int levelled,
                   double* out) nogil:
        """out = [fl_new, dist_delta, tas_at_start, rocd_at_start]."""
        cdef double k1[4]
        cdef double k2[4]
        cdef double k3[4]
        cdef double k4[4]
        self._deriv(fl, phase, regime, cruise_mach, cruise_cas_ms, commanded_cas_ms,
                    commanded_rocd_ms, dt_k, w_along, w_cross, levelled, k1)
        self._deriv(fl + 0.5 * dt * k1[0], phase, regime, cruise_mach, cruise_cas_ms,
                    commanded_cas_ms, commanded_rocd_ms, dt_k, w_along, w_cross, levelled, k2)
        self._deriv(fl + 0.5 * dt * k2[0], phase, regime, cruise_mach, cruise_cas_ms,
                    commanded_cas_ms, commanded_rocd_ms, dt_k, w_along, w_cross, levelled, k3)
        self._deriv(fl + dt * k3[0], phase, regime, cruise_mach, cruise_cas_ms,
                    commanded_cas_ms, commanded_rocd_ms, dt_k, w_along, w_cross, levelled, k4)
        out[0] = fl + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        out[1] = dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        out[2] = k1[2]
        out[3] = k1[3]

    def run(self, double fl, int phase, int regime_mach, double cruise_mach,
            double cruise_cas_ms, double commanded_cas_ms, double commanded_rocd_ms,
            target_fl, transition_fl, double dt_k, double w_along, double w_cross,
            double dt_total, int n_sub):
        cdef double target = _NO_TARGET if target_fl is None else <double> target_fl
        cdef double transition = _NO_TARGET if transition_fl is None else <double> transition_fl
        cdef double dt = dt_total / n_sub
        cdef double dist = 0.0
        cdef int levelled = 0
        cdef double min_abs_rocd = _NO_TARGET
        cdef double max_accel = 0.0
        cdef double prev_tas = -1.0
        cdef int regime = 1 if regime_mach else 0
        cdef double step[4]
        cdef double part[4]
        cdef double fl_new, d_step, tas1, rocd1, frac, a1, acc, h, t_act, sound
        cdef int i, crossed
        for i in range(n_sub):
            regime = self._regime_at(fl, phase, regime, transition, commanded_cas_ms)
            self._rk4(fl, dt, phase, regime, cruise_mach, cruise_cas_ms, commanded_cas_ms,
                      commanded_rocd_ms, dt_k, w_along, w_cross, levelled, step)
            fl_new = step[0]
            d_step = step[1]
            tas1 = step[2]
            rocd1 = step[3]
            if (not levelled and phase != 0 and commanded_cas_ms <= 0.0
                    and transition < _NO_TARGET and fl_new != fl):
                if phase < 0:
                    crossed = 1 if (fl > transition >= fl_new) else 0
                else:
                    crossed = 1 if (fl < transition <= fl_new) else 0
                if crossed:
                    frac = (transition - fl) / (fl_new - fl)
                    if frac < 0.0:
                        frac = 0.0
                    if frac > 1.0:
                        frac = 1.0
                    self._rk4(fl, dt * frac, phase, regime, cruise_mach, cruise_cas_ms,
                              commanded_cas_ms, commanded_rocd_ms, dt_k, w_along,
                              w_cross, levelled, part)
                    tas1 = part[2]
                    rocd1 = part[3]
                    regime = 0 if phase < 0 else 1
                    self._rk4(transition, dt * (1.0 - frac), phase, regime, cruise_mach,
                              cruise_cas_ms, commanded_cas_ms, commanded_rocd_ms, dt_k,
                              w_along, w_cross, levelled, step)
                    fl_new = step[0]
                    d_step = part[1] + step[1]
            dist = dist + d_step
            if phase != 0 and not levelled:
                a1 = rocd1 if rocd1 >= 0.0 else -rocd1
                if a1 < min_abs_rocd:
                    min_abs_rocd = a1
            if prev_tas >= 0.0:
                acc = (tas1 - prev_tas) / dt
                if acc < 0.0:
                    acc = -acc
                if acc > max_accel:
                    max_accel = acc
            prev_tas = tas1
            if not levelled and phase != 0:
                if (phase > 0 and fl_new >= target) or (phase < 0 and fl_new <= target):
                    fl_new = target
                    levelled = 1
            fl = fl_new
        regime = self._regime_at(fl, phase, regime, transition, commanded_cas_ms)
        h = fl * _FT_PER_FL
        t_act = self._isa_temp(h) + dt_k
        sound = sqrt(self.gamma * self.r_gas * t_act)
        self._deriv(fl, phase, regime, cruise_mach, cruise_cas_ms, commanded_cas_ms,
                    commanded_rocd_ms, dt_k, w_along, w_cross, levelled, step)
        cdef double cas_end = self._tas2cas(step[2], h, dt_k)
        return (fl, dist, regime, levelled, cas_end, step[2], step[2] / sound,
                step[3], min_abs_rocd, max_accel)
