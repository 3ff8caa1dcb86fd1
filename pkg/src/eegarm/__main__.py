import sys

from eegarm.cli import main

sys.exit(main())
