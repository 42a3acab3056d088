import sys

from tensorrank.cli import main

sys.exit(main())
