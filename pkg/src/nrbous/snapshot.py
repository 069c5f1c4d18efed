"""JSON snapshot format for spectral fields.

Only the half lattice ``k3 > 0``, ``(k3 = 0, k2 > 0)``, ``(k3 = k2 = 0, k1 > 0)``
is written; the other half follows from the reality condition
``U_{-k} = conj(U_k)``.  Every record carries a format name and version.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import DomainError
from .spectral import DomainParams, SpectralField, get_lattice

FORMAT_NAME = "nrbous-spectral-snapshot"
FORMAT_VERSION = 1


def snapshot_dict(field):
    lat = field.lattice
    half = np.flatnonzero(lat.half_mask())
    modes = []
    for i in half:
        v = field.values[i]
        if np.any(v != 0):
            k = [int(x) for x in lat.kint[i]]
            modes.append(k + [float(x) for pair in zip(v.real, v.imag) for x in pair])
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "K": lat.K,
        "L1": lat.dom.L1,
        "L2": lat.dom.L2,
        "eta": lat.dom.eta,
        "divfree": field.divfree,
        "modes": modes,
    }


def field_from_dict(record):
    if record.get("format") != FORMAT_NAME:
        raise DomainError(f"not a spectral snapshot: format={record.get('format')!r}")
    if record.get("version") != FORMAT_VERSION:
        raise DomainError(f"unsupported snapshot version {record.get('version')!r}")
    dom = DomainParams(record["eta"], record["L1"], record["L2"])
    lat = get_lattice(int(record["K"]), dom)
    coef = np.zeros((lat.size, 4), complex)
    for row in record["modes"]:
        k = row[:3]
        vals = np.asarray(row[3:], float)
        v = vals[0::2] + 1j * vals[1::2]
        i = lat.index(np.asarray(k))
        coef[i] = v
        coef[lat.partner[i]] = v.conj()
    return SpectralField(lat, coef, divfree=bool(record.get("divfree", True)))


def save_snapshot(field, path):
    with open(path, "w") as fh:
        json.dump(snapshot_dict(field), fh)


def load_snapshot(path):
    with open(path) as fh:
        return field_from_dict(json.load(fh))
