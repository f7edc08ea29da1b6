import sys

from flagint.cli.main import main

sys.exit(main())
