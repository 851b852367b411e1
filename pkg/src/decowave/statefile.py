"""State files: a versioned header plus the amplitude list.

Two encodings, chosen by extension:

* ``.npz``  binary; header stored as a JSON string next to the raw complex128 array.
* ``.json`` text; amplitudes as ``[re, im]`` pairs written with ``repr`` precision.

Both round-trip bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .basis import ChainSpec, enumerate_sector
from .errors import ContractViolation, DecowaveError
from .operators import StateVector

FORMAT = "decowave-state"
FORMAT_VERSION = 1
PHASE_CONVENTION = "largest-magnitude amplitude (lowest index on ties) real positive"


class StateFileError(DecowaveError, OSError):
    exit_code = 2


def make_header(state: StateVector, **extra) -> dict:
    header = {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "n_sites": state.chain.n_sites,
        "exchange_j": state.chain.exchange_j,
        "anisotropy_delta": state.chain.anisotropy_delta,
        "sector_total_sz": None if state.sector is None else state.sector.total_sz,
        "bit_convention": "bit b of the basis index is site b+1, 1 = up",
        "phase_convention": PHASE_CONVENTION,
    }
    header.update(extra)
    return header


def save_state(path, state: StateVector, **extra) -> Path:
    path = Path(path)
    header = make_header(state, **extra)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == ".npz":
            with open(path, "wb") as fh:
                np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), amplitudes=state.amplitudes)
        elif path.suffix == ".json":
            doc = dict(header)
            doc["amplitudes"] = [[float(z.real), float(z.imag)] for z in state.amplitudes]
            path.write_text(json.dumps(doc))
        else:
            raise StateFileError(f"{path}: state files must end in .npz or .json")
    except OSError as exc:
        raise StateFileError(f"{path}: {exc}") from exc
    return path


def load_state(path) -> tuple[StateVector, dict]:
    path = Path(path)
    try:
        if path.suffix == ".npz":
            with np.load(path, allow_pickle=False) as data:
                header = json.loads(str(data["header"]))
                amps = np.array(data["amplitudes"])
        elif path.suffix == ".json":
            doc = json.loads(path.read_text())
            pairs = np.array(doc.pop("amplitudes"), dtype=float).reshape(-1, 2)
            amps = pairs[:, 0] + 1j * pairs[:, 1]
            header = doc
        else:
            raise StateFileError(f"{path}: state files must end in .npz or .json")
    except (OSError, ValueError, KeyError) as exc:
        raise StateFileError(f"{path}: {exc}") from exc
    if header.get("format") != FORMAT or header.get("format_version") != FORMAT_VERSION:
        raise StateFileError(f"{path}: not a {FORMAT} v{FORMAT_VERSION} file")
    chain = ChainSpec(header["n_sites"], header["exchange_j"], header["anisotropy_delta"])
    sz = header["sector_total_sz"]
    sector = None if sz is None else enumerate_sector(chain, sz)
    try:
        state = StateVector(chain, amps, sector)
    except ContractViolation as exc:
        raise StateFileError(f"{path}: {exc}") from exc
    return state, header
