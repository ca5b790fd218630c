"""python -m event_kiwi"""
import sys

from .cli import main

sys.exit(main())
