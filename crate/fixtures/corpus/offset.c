int main() {
    int i = 0;
    int k = 1;
    while (i < 10) {
        i++;
        k = k + 1;
    }
    assert(k == 11);
    return 0;
}
