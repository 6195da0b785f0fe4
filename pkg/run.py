import sys

from altmindict.commands.cli import main


if __name__ == '__main__':
    # Subcommands: gen | run | compare | sweep | check (see --help)
    sys.exit(main())
