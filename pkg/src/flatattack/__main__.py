from flatattack.main import run

run()
