"""
Reference scorer process for the external line protocol.

    python -m rtasr.scoring.gmm_worker model.txt
"""

import sys

import numpy as np

from .external import HANDSHAKE, PROTOCOL_VERSION, format_row
from .gmm import read_gmm


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m rtasr.scoring.gmm_worker <gmm model>", file=sys.stderr)
        return 2
    model = read_gmm(argv[0])
    print(f"{HANDSHAKE} {PROTOCOL_VERSION} {model.n_pdfs}", flush=True)
    for line in sys.stdin:
        if not line.strip():
            continue
        x = np.array([float(v) for v in line.split()])
        print(format_row(model.loglik(x)[0]), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
