import sys

from dcprotect.cli import main

sys.exit(main())
