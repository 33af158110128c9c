import sys

from fum.cli import main

sys.exit(main())
