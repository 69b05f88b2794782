#!/usr/bin/env python3
"""
main.py — ringtherm entry point

Run with:  python main.py <command> [options]
           python main.py --help
"""

import os
import sys

from dotenv import load_dotenv

# Ensure core modules are importable
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.commands import command_registry


def main(argv=None) -> int:
    load_dotenv()
    return command_registry.execute(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
