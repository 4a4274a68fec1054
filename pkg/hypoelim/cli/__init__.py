"""
Command-line subcommands. Each module registers its parsers on the main
parser and returns a process exit code from its handlers.
"""
