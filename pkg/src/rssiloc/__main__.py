import sys

from rssiloc.cli import main

sys.exit(main())
