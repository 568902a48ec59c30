import sys

from statreg.cli import main

sys.exit(main())
