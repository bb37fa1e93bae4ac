"""Recompute every headline number and print the comparison table."""
import sys

from contextual_key.cli import main

if __name__ == "__main__":
    sys.exit(main(["reproduce", "--pretty", *sys.argv[1:]]))
