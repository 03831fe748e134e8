from spacetoken.commands import ablate, data, encode, evaluate, plot, train

COMMANDS = [data, train, evaluate, ablate, encode, plot]

__all__ = ["COMMANDS"]
