"""Pure-Python blip integrator: the reference kernel.

One call advances a single aircraft through one radar interval with
fixed-step RK4 sub-stepping of the energy-balance rate-of-climb/descent
equation

    dh/dt = ((T_isa - dT) / T_isa) * ((T_HR - D) * V_TAS / (m * g0)) * f(M)

together with along-track ground distance. The Mach/CAS regime switches at
a precomputed crossover flight level; the substep that crosses it is split
at the crossing so results converge under substep refinement. The compiled
module ``airtwin.kernels._fast`` mirrors this file expression for
expression; keep the arithmetic in both in lockstep (same operations, same
order) so the backends stay bit-compatible.
"""

import math

BACKEND = "pure"

_FT_PER_FL = 30.48          # metres per flight level
_NO_TARGET = 1e30


class BlipIntegrator:
    """Holds the per-member performance curves and atmosphere constants.

    Every speed crossing this boundary is in m/s (including the CAS
    schedule curve); forces are N, altitudes are flight levels.
    """

    def __init__(self, fl_grid, force_curve, opposing_curve, cas_curve,
                 mass, esf_c_cas, esf_c_mach, t0, p0, lapse, h_trop, r_gas, gamma, g0):
        self.grid = [float(x) for x in fl_grid]
        self.force = [float(x) for x in force_curve]
        self.opposing = [float(x) for x in opposing_curve]
        self.cas = [float(x) for x in cas_curve]
        self.mass = float(mass)
        self.esf_c_cas = float(esf_c_cas)
        self.esf_c_mach = float(esf_c_mach)
        self.t0 = float(t0)
        self.p0 = float(p0)
        self.lapse = float(lapse)
        self.h_trop = float(h_trop)
        self.r_gas = float(r_gas)
        self.gamma = float(gamma)
        self.g0 = float(g0)
        # derived constants, precomputed once
        self.expo = self.g0 / (self.lapse * self.r_gas)
        self.t_trop = self.t0 - self.lapse * self.h_trop
        self.p_trop = self.p0 * (self.t_trop / self.t0) ** self.expo
        self.rho0 = self.p0 / (self.r_gas * self.t0)
        self.mu = (self.gamma - 1.0) / self.gamma

    # --- scalar atmosphere helpers (mirrored in _fast.pyx) ---

    def _isa_temp(self, h):
        if h > self.h_trop:
            return self.t_trop
        return self.t0 - self.lapse * h

    def _pressure(self, h):
        if h <= self.h_trop:
            return self.p0 * (1.0 - self.lapse * h / self.t0) ** self.expo
        return self.p_trop * math.exp(-self.g0 * (h - self.h_trop) / (self.r_gas * self.t_trop))

    def _cas2tas(self, cas_ms, h, dt_k):
        p = self._pressure(h)
        rho = p / (self.r_gas * (self._isa_temp(h) + dt_k))
        inner = (1.0 + 0.5 * self.mu * self.rho0 / self.p0 * cas_ms * cas_ms) ** (1.0 / self.mu) - 1.0
        return math.sqrt((2.0 / self.mu) * (p / rho) * ((1.0 + (self.p0 / p) * inner) ** self.mu - 1.0))

    def _tas2cas(self, tas_ms, h, dt_k):
        p = self._pressure(h)
        rho = p / (self.r_gas * (self._isa_temp(h) + dt_k))
        inner = (1.0 + 0.5 * self.mu * rho / p * tas_ms * tas_ms) ** (1.0 / self.mu) - 1.0
        return math.sqrt((2.0 / self.mu) * (self.p0 / self.rho0) * ((1.0 + (p / self.p0) * inner) ** self.mu - 1.0))

    def _interp(self, values, x):
        grid = self.grid
        n = len(grid)
        if x <= grid[0]:
            return values[0]
        if x >= grid[n - 1]:
            return values[n - 1]
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if grid[mid] <= x:
                lo = mid
            else:
                hi = mid
        x0 = grid[lo]
        return values[lo] + (values[lo + 1] - values[lo]) * (x - x0) / (grid[lo + 1] - x0)

    def _regime_at(self, fl, phase, regime_default, transition_fl, commanded_cas_ms):
        """1 = constant Mach, 0 = constant CAS, from the crossover level."""
        if commanded_cas_ms > 0.0 or phase == 0 or transition_fl >= _NO_TARGET:
            return regime_default
        if fl > transition_fl:
            return 1
        return 0

    def _deriv(self, fl, phase, regime_mach, cruise_mach, cruise_cas_ms,
               commanded_cas_ms, commanded_rocd_ms, dt_k, w_along, w_cross, levelled):
        """(dfl/dt, ds/dt, tas, rocd m/s) at flight level fl."""
        h = fl * _FT_PER_FL
        t_isa = self._isa_temp(h)
        t_act = t_isa + dt_k
        sound = math.sqrt(self.gamma * self.r_gas * t_act)
        if commanded_cas_ms > 0.0:
            cas_ms = commanded_cas_ms
            tas = self._cas2tas(cas_ms, h, dt_k)
            mach = tas / sound
            use_mach_esf = False
        elif regime_mach:
            mach = cruise_mach
            tas = mach * sound
            use_mach_esf = True
        else:
            cas_ms = cruise_cas_ms if phase == 0 else self._interp(self.cas, fl)
            tas = self._cas2tas(cas_ms, h, dt_k)
            mach = tas / sound
            use_mach_esf = False
        under = tas * tas - w_cross * w_cross
        if under < 0.0:
            under = 0.0
        gs = math.sqrt(under) + w_along
        if phase == 0 or levelled:
            return 0.0, gs, tas, 0.0
        if commanded_rocd_ms != 0.0:
            rocd = commanded_rocd_ms if phase > 0 else -commanded_rocd_ms
            return rocd / _FT_PER_FL, gs, tas, rocd
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
        return rocd / _FT_PER_FL, gs, tas, rocd

    def _rk4(self, fl, dt, phase, regime, cruise_mach, cruise_cas_ms,
             commanded_cas_ms, commanded_rocd_ms, dt_k, w_along, w_cross, levelled):
        """One RK4 step: (fl_new, dist_delta, tas_at_start, rocd_at_start)."""
        k1f, k1s, tas1, rocd1 = self._deriv(fl, phase, regime, cruise_mach, cruise_cas_ms,
                                            commanded_cas_ms, commanded_rocd_ms, dt_k,
                                            w_along, w_cross, levelled)
        k2f, k2s, _, _ = self._deriv(fl + 0.5 * dt * k1f, phase, regime, cruise_mach,
                                     cruise_cas_ms, commanded_cas_ms, commanded_rocd_ms,
                                     dt_k, w_along, w_cross, levelled)
        k3f, k3s, _, _ = self._deriv(fl + 0.5 * dt * k2f, phase, regime, cruise_mach,
                                     cruise_cas_ms, commanded_cas_ms, commanded_rocd_ms,
                                     dt_k, w_along, w_cross, levelled)
        k4f, k4s, _, _ = self._deriv(fl + dt * k3f, phase, regime, cruise_mach,
                                     cruise_cas_ms, commanded_cas_ms, commanded_rocd_ms,
                                     dt_k, w_along, w_cross, levelled)
        fl_new = fl + dt / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
        dist = dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        return fl_new, dist, tas1, rocd1

    def run(self, fl, phase, regime_mach, cruise_mach, cruise_cas_ms, commanded_cas_ms,
            commanded_rocd_ms, target_fl, transition_fl, dt_k, w_along, w_cross,
            dt_total, n_sub):
        """Advance one blip. Returns a 10-tuple:

        (fl, dist_m, regime_mach, levelled, cas_ms, tas_ms, mach,
         rocd_ms_end, min_abs_rocd_ms, max_abs_accel_ms2)
        """
        if target_fl is None:
            target_fl = _NO_TARGET
        if transition_fl is None:
            transition_fl = _NO_TARGET
        dt = dt_total / n_sub
        dist = 0.0
        levelled = 0
        min_abs_rocd = _NO_TARGET
        max_accel = 0.0
        prev_tas = -1.0
        regime = 1 if regime_mach else 0
        for _ in range(n_sub):
            regime = self._regime_at(fl, phase, regime, transition_fl, commanded_cas_ms)
            fl_new, d_step, tas1, rocd1 = self._rk4(
                fl, dt, phase, regime, cruise_mach, cruise_cas_ms, commanded_cas_ms,
                commanded_rocd_ms, dt_k, w_along, w_cross, levelled)
            # split the substep at the regime crossover so refinement converges
            if (not levelled and phase != 0 and commanded_cas_ms <= 0.0
                    and transition_fl < _NO_TARGET and fl_new != fl):
                crossed = (fl > transition_fl >= fl_new) if phase < 0 else \
                    (fl < transition_fl <= fl_new)
                if crossed:
                    frac = (transition_fl - fl) / (fl_new - fl)
                    if frac < 0.0:
                        frac = 0.0
                    if frac > 1.0:
                        frac = 1.0
                    _, d_first, tas1, rocd1 = self._rk4(
                        fl, dt * frac, phase, regime, cruise_mach, cruise_cas_ms,
                        commanded_cas_ms, commanded_rocd_ms, dt_k, w_along, w_cross,
                        levelled)
                    regime = 0 if phase < 0 else 1
                    fl_new, d_second, _, _ = self._rk4(
                        transition_fl, dt * (1.0 - frac), phase, regime, cruise_mach,
                        cruise_cas_ms, commanded_cas_ms, commanded_rocd_ms, dt_k,
                        w_along, w_cross, levelled)
                    d_step = d_first + d_second
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
                if (phase > 0 and fl_new >= target_fl) or (phase < 0 and fl_new <= target_fl):
                    fl_new = target_fl
                    levelled = 1
            fl = fl_new
        # end-of-blip state report
        regime = self._regime_at(fl, phase, regime, transition_fl, commanded_cas_ms)
        h = fl * _FT_PER_FL
        t_act = self._isa_temp(h) + dt_k
        sound = math.sqrt(self.gamma * self.r_gas * t_act)
        dfl, _, tas_end, rocd_end = self._deriv(fl, phase, regime, cruise_mach, cruise_cas_ms,
                                                commanded_cas_ms, commanded_rocd_ms, dt_k,
                                                w_along, w_cross, levelled)
        cas_end = self._tas2cas(tas_end, h, dt_k)
        return (fl, dist, regime, levelled, cas_end, tas_end, tas_end / sound,
                rocd_end, min_abs_rocd, max_accel)
