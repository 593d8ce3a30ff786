"""stumps: aligns cricket-video feature streams with ball-by-ball commentary
and serves fine-grain, searchable shot annotations."""

__version__ = "0.1.0"
