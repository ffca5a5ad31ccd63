import sys

from tptsynth.cli import main

sys.exit(main())
