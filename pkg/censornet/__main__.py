import sys

from . import __version__
from .cli import network_main, oracle_main, run_main, summarize_main

SUBCOMMANDS = {
    "run": run_main,
    "summarize": summarize_main,
    "oracle": oracle_main,
    "network": network_main,
}


def main():
    if len(sys.argv) < 2:
        print(
            """censornet: specify subcommand to run

                Available subcommands:
                run - Run a censoring experiment and write records
                summarize - Summarize a records file as JSON
                oracle - Run the built-in self-checks
                network - Export the networks of one replication
            """
        )
        sys.exit(1)
    subcommand = sys.argv[1]
    if subcommand == "--version":
        print(f"censornet {__version__}")
        sys.exit(0)
    if subcommand not in SUBCOMMANDS:
        print("censornet: unrecognised subcommand", subcommand)
        sys.exit(1)
    sys.argv = sys.argv[1:]
    SUBCOMMANDS[subcommand]()


if __name__ == "__main__":
    main()
