#!/usr/bin/env python3
"""Runs an SMT-LIB2 script from stdin through the Bitwuzla Python bindings."""
import os
import sys
import tempfile

import bitwuzla


def main():
    text = sys.stdin.read()
    tm = bitwuzla.TermManager()
    opts = bitwuzla.Options()
    opts.set(bitwuzla.Option.PRODUCE_MODELS, True)
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as f:
        f.write(text)
        path = f.name
    try:
        parser = bitwuzla.Parser(tm, opts)
        err = parser.parse(path)
        if err:
            print('(error "%s")' % err.replace('"', "'"))
            sys.exit(1)
    finally:
        os.unlink(path)


if __name__ == "__main__":
    main()
