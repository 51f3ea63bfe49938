# Subcommand handlers: each module exposes NAME, HELP and run(cfg) -> exit code
