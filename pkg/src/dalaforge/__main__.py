import sys

from dalaforge.cli import main

sys.exit(main())
