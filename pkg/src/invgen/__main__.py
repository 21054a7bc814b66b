import sys

from invgen.cli import main

sys.exit(main())
