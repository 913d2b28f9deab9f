import sys

from sublinear.cli import main

sys.exit(main())
