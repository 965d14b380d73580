"""``python3 -m chevron`` runs the command-line interface."""

from .cli import main

main()
