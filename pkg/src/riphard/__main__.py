import sys

from riphard.cli import main

sys.exit(main())
