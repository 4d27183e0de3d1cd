int main() {
    int x = 0;
    int y = 10;
    while (x < 10) {
        x++;
        y--;
    }
    assert(y == 0);
    return 0;
}
