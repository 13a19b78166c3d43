from costnav.cli import main

main()
