"""Weak-drive steady-state g2(0) of a CW-driven Kerr oscillator.

Independent of the master-equation machinery: the state is truncated to
c0|0> + c1|1> + c2|2> with c0 = 1 and the amplitude equations are solved
as a small linear system.
"""
import numpy as np


def kerr_amplitudes(e_p_minus_el, U, gamma, drive=1e-4):
    """Steady (c1, c2) of the two-photon-truncated amplitude equations (hbar F = drive, meV).

    0 = (D - i g/2) c1 + F + sqrt2 F c2
    0 = (2D + U - i g) c2 + sqrt2 F c1
    """
    d1 = e_p_minus_el - 0.5j * gamma
    d2 = 2 * e_p_minus_el + U - 1j * gamma
    s2 = np.sqrt(2.0)
    m = np.array([[d1, s2 * drive], [s2 * drive, d2]], dtype=complex)
    rhs = np.array([-drive, 0.0], dtype=complex)
    c1, c2 = np.linalg.solve(m, rhs)
    return c1, c2


def kerr_g2_amplitudes(e_p_minus_el, U, gamma, drive=1e-6):
    """g2(0) = 2|c2|^2 / |c1|^4 from the amplitude equations."""
    c1, c2 = kerr_amplitudes(e_p_minus_el, U, gamma, drive)
    return float(2 * abs(c2) ** 2 / abs(c1) ** 4)


def kerr_g2_closed_form(e_p_minus_el, U, gamma):
    """Lowest-order weak-drive limit: (D^2 + g^2/4) / ((D + U/2)^2 + g^2/4)."""
    return (e_p_minus_el ** 2 + gamma ** 2 / 4) / ((e_p_minus_el + U / 2) ** 2 + gamma ** 2 / 4)
