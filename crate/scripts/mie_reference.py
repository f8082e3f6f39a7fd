"""Separation-of-variables reference for plane-wave scattering by a
sound-soft circle centered at the origin, evaluated with mpmath."""
import json
import sys

import mpmath as mp

mp.mp.dps = 40


def case(radius, k, theta_d, n_angles, n_nodes, terms=60):
    R, k = mp.mpf(radius), mp.mpf(k)
    coef = {}
    for n in range(-terms, terms + 1):
        h = mp.hankel1(n, k * R)
        coef[n] = (mp.besselj(n, k * R) / h, 1 / h)
    angles = [(2 * l - 1) * mp.pi / n_angles for l in range(1, n_angles + 1)]
    far = []
    pref = -mp.sqrt(2 / (mp.pi * k)) * mp.exp(-1j * mp.pi / 4)
    for th in angles:
        v = pref * mp.fsum(coef[n][0] * mp.exp(1j * n * (th - theta_d)) for n in coef)
        far.append([float(v.real), float(v.imag)])
    dfar = []
    for th in angles:
        def ff(r):
            return pref * mp.fsum(
                mp.besselj(n, k * r) / mp.hankel1(n, k * r) * mp.exp(1j * n * (th - theta_d))
                for n in range(-terms, terms + 1)
            )
        v = mp.diff(ff, R)
        dfar.append([float(v.real), float(v.imag)])
    nodes = [2 * mp.pi * j / n_nodes for j in range(n_nodes)]
    dudn = []
    for t in nodes:
        v = -(2j / (mp.pi * R)) * mp.fsum((1j) ** n * coef[n][1] * mp.exp(1j * n * (t - theta_d)) for n in coef)
        dudn.append([float(v.real), float(v.imag)])
    return {
        "radius": radius,
        "k": float(k),
        "theta_d": theta_d,
        "angles": [float(a) for a in angles],
        "far_field": far,
        "dfar_dradius": dfar,
        "node_params": [float(t) for t in nodes],
        "dudn": dudn,
    }


cases = [case(1.0, 1, 0.0, 16, 32), case(1.0, 5, 0.7, 32, 64), case(1.5, 4, 2.0, 16, 32)]
json.dump(cases, sys.stdout)
