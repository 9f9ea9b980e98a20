"""CLI module"""

from cojoin.cli import calibrate, config_cmd, gen, join, largejoin, lockbench, main, montecarlo, sweep

__all__ = ["calibrate", "config_cmd", "gen", "join", "largejoin", "lockbench", "main", "montecarlo", "sweep"]
