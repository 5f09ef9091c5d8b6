#!/usr/bin/env python3
"""Runs an SMT-LIB2 script from stdin through the cvc5 Python bindings and
prints the command responses to stdout, like a stdin-reading solver binary."""
import sys

import cvc5


def main():
    text = sys.stdin.read()
    tm = cvc5.TermManager()
    solver = cvc5.Solver(tm)
    solver.setOption("produce-models", "true")
    sm = cvc5.SymbolManager(tm)
    parser = cvc5.InputParser(solver, sm)
    parser.setStringInput(cvc5.InputLanguage.SMT_LIB_2_6, text, "stdin")
    out = sys.stdout
    while True:
        cmd = parser.nextCommand()
        if cmd.isNull():
            break
        res = cmd.invoke(solver, sm)
        if res and res.strip():
            out.write(res if res.endswith("\n") else res + "\n")
            out.flush()


if __name__ == "__main__":
    try:
        main()
    except Exception as e:  # parser or solver failure
        print('(error "%s")' % str(e).replace('"', "'"))
        sys.exit(1)
