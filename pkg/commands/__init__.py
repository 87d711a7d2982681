from commands import compare, evaluate, fig1, sweep, train

# registration order is the order shown in --help
COMMANDS = [train, sweep, fig1, evaluate, compare]

__all__ = ["COMMANDS", "train", "sweep", "fig1", "evaluate", "compare"]
