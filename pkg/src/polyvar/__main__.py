"""Allow ``python -m polyvar``."""

from polyvar.cli import main

if __name__ == "__main__":
    main()
